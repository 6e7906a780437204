//! Design-matrix storage shared by the loss kernels and the solvers.
//!
//! Two layouts are supported: a dense matrix (synthetic data) and a
//! compressed-sparse-row matrix (LIBSVM data). Both expose the handful of
//! products the solvers need: `X z`, `X^T r`, column gathers and row norms.

use nalgebra::{DMatrix, DVectorView};

use crate::error::{Error, Result};

/// Compressed-sparse-row matrix with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 {
            return Err(Error::arg(format!(
                "indptr has length {}, expected {}",
                indptr.len(),
                nrows + 1
            )));
        }
        if indices.len() != values.len() || indptr[nrows] != indices.len() || indptr[0] != 0 {
            return Err(Error::arg("inconsistent CSR buffers"));
        }
        for i in 0..nrows {
            let (lo, hi) = (indptr[i], indptr[i + 1]);
            if lo > hi {
                return Err(Error::arg(format!("row {i}: decreasing indptr")));
            }
            let row = &indices[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::arg(format!("row {i}: column indices not strictly increasing")));
            }
            if row.last().is_some_and(|&j| j >= ncols) {
                return Err(Error::arg(format!("row {i}: column index out of range")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("non-finite matrix entry"));
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds a CSR matrix from per-row `(column, value)` lists.
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for &(j, v) in row {
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self::new(rows.len(), ncols, indptr, indices, values)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }
}

/// Sample matrix `X` (n rows = samples, p columns = features).
#[derive(Debug, Clone, PartialEq)]
pub enum DesignMatrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl DesignMatrix {
    /// Dense matrix from row-major data.
    pub fn from_row_major(nrows: usize, ncols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::arg(format!(
                "expected {} entries for a {nrows}x{ncols} matrix, got {}",
                nrows * ncols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("non-finite matrix entry"));
        }
        Ok(DesignMatrix::Dense(DMatrix::from_row_slice(nrows, ncols, data)))
    }

    pub fn nrows(&self) -> usize {
        match self {
            DesignMatrix::Dense(m) => m.nrows(),
            DesignMatrix::Sparse(m) => m.nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            DesignMatrix::Dense(m) => m.ncols(),
            DesignMatrix::Sparse(m) => m.ncols,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, DesignMatrix::Sparse(_))
    }

    /// Number of explicitly stored entries.
    pub fn nnz(&self) -> usize {
        match self {
            DesignMatrix::Dense(m) => m.len(),
            DesignMatrix::Sparse(m) => m.nnz(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            DesignMatrix::Dense(m) => m[(i, j)],
            DesignMatrix::Sparse(m) => {
                let (cols, vals) = m.row(i);
                cols.binary_search(&j).map_or(0.0, |k| vals[k])
            }
        }
    }

    /// Nonzero entries of row `i` as `(column, value)` pairs, columns increasing.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        match self {
            DesignMatrix::Dense(m) => (0..m.ncols())
                .filter_map(|j| {
                    let v = m[(i, j)];
                    (v != 0.0).then_some((j, v))
                })
                .collect(),
            DesignMatrix::Sparse(m) => {
                let (cols, vals) = m.row(i);
                cols.iter().copied().zip(vals.iter().copied()).collect()
            }
        }
    }

    /// `X z`.
    pub fn matvec(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.ncols());
        match self {
            DesignMatrix::Dense(m) => (m * DVectorView::from_slice(z, z.len())).data.into(),
            DesignMatrix::Sparse(m) => (0..m.nrows)
                .map(|i| {
                    let (cols, vals) = m.row(i);
                    cols.iter().zip(vals).map(|(&j, &v)| v * z[j]).sum()
                })
                .collect(),
        }
    }

    /// `X z` for a vector given by its nonzeros, `z[cols[k]] = vals[k]`.
    ///
    /// Dense cost is `O(n |cols|)`; sparse cost is `O(nnz(X))`.
    pub fn matvec_sparse(&self, cols: &[usize], vals: &[f64]) -> Vec<f64> {
        debug_assert_eq!(cols.len(), vals.len());
        let n = self.nrows();
        match self {
            DesignMatrix::Dense(m) => {
                let mut out = vec![0.0; n];
                for (&j, &v) in cols.iter().zip(vals) {
                    if v == 0.0 {
                        continue;
                    }
                    for (o, &x) in out.iter_mut().zip(m.column(j).iter()) {
                        *o += v * x;
                    }
                }
                out
            }
            DesignMatrix::Sparse(m) => {
                let mut z = vec![0.0; m.ncols];
                for (&j, &v) in cols.iter().zip(vals) {
                    z[j] = v;
                }
                self.matvec(&z)
            }
        }
    }

    /// `X^T r`.
    pub fn tr_matvec(&self, r: &[f64]) -> Vec<f64> {
        debug_assert_eq!(r.len(), self.nrows());
        match self {
            DesignMatrix::Dense(m) => m
                .tr_mul(&DVectorView::from_slice(r, r.len()))
                .data
                .into(),
            DesignMatrix::Sparse(m) => {
                let mut out = vec![0.0; m.ncols];
                for (i, &ri) in r.iter().enumerate() {
                    if ri == 0.0 {
                        continue;
                    }
                    let (cols, vals) = m.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        out[j] += v * ri;
                    }
                }
                out
            }
        }
    }

    /// Dense copy of the columns `cols` (in the given order), `n x |cols|`.
    pub fn gather_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        match self {
            DesignMatrix::Dense(m) => m.select_columns(cols.iter()),
            DesignMatrix::Sparse(m) => {
                let mut slot = vec![usize::MAX; m.ncols];
                for (k, &j) in cols.iter().enumerate() {
                    slot[j] = k;
                }
                let mut out = DMatrix::zeros(m.nrows, cols.len());
                for i in 0..m.nrows {
                    let (cs, vs) = m.row(i);
                    for (&j, &v) in cs.iter().zip(vs) {
                        let k = slot[j];
                        if k != usize::MAX {
                            out[(i, k)] = v;
                        }
                    }
                }
                out
            }
        }
    }

    /// `||x_i||_1` for every row.
    pub fn row_l1_norms(&self) -> Vec<f64> {
        match self {
            DesignMatrix::Dense(m) => (0..m.nrows())
                .map(|i| m.row(i).iter().map(|v| v.abs()).sum())
                .collect(),
            DesignMatrix::Sparse(m) => (0..m.nrows)
                .map(|i| m.row(i).1.iter().map(|v| v.abs()).sum())
                .collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            DesignMatrix::Dense(m) => m.clone(),
            DesignMatrix::Sparse(m) => {
                let mut out = DMatrix::zeros(m.nrows, m.ncols);
                for i in 0..m.nrows {
                    let (cs, vs) = m.row(i);
                    for (&j, &v) in cs.iter().zip(vs) {
                        out[(i, j)] = v;
                    }
                }
                out
            }
        }
    }

    /// Keeps only the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        match self {
            DesignMatrix::Dense(m) => DesignMatrix::Dense(m.select_rows(rows.iter())),
            DesignMatrix::Sparse(m) => {
                let picked: Vec<Vec<(usize, f64)>> =
                    rows.iter().map(|&i| self.row_entries(i)).collect();
                // Rows come from a validated matrix, so this cannot fail.
                DesignMatrix::Sparse(CsrMatrix::from_rows(m.ncols, &picked).expect("valid rows"))
            }
        }
    }
}
