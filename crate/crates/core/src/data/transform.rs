//! Feature preprocessing used on the real datasets.

use nalgebra::DMatrix;

use crate::matrix::{CsrMatrix, DesignMatrix};
use crate::model::Dataset;

/// Population mean and standard deviation.
fn moments(values: impl Iterator<Item = f64> + Clone, len: usize) -> (f64, f64) {
    let n = len as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Standardizes every row to mean 0 and variance 1, then every column the
/// same way. Zero-variance rows or columns are centered but not scaled.
/// Sparse input is densified.
pub fn normalize_two_pass(ds: &Dataset) -> Dataset {
    let mut x = ds.x().to_dense();
    standardize_rows(&mut x);
    standardize_columns(&mut x);
    rebuild(ds, DesignMatrix::Dense(x))
}

fn standardize_rows(x: &mut DMatrix<f64>) {
    let p = x.ncols();
    for i in 0..x.nrows() {
        let (mean, sd) = moments(x.row(i).iter().copied(), p);
        let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
        for v in x.row_mut(i).iter_mut() {
            *v = (*v - mean) * scale;
        }
    }
}

fn standardize_columns(x: &mut DMatrix<f64>) {
    let n = x.nrows();
    for j in 0..x.ncols() {
        let (mean, sd) = moments(x.column(j).iter().copied(), n);
        let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
        for v in x.column_mut(j).iter_mut() {
            *v = (*v - mean) * scale;
        }
    }
}

/// Maps each column affinely so its minimum becomes -1 and its maximum +1.
/// Constant columns become 0.
///
/// Sparse input stays sparse when every column maps 0 to 0 (columns with
/// `min = -max`, or constant columns); otherwise it is densified.
pub fn scale_to_unit_interval(ds: &Dataset) -> Dataset {
    let (n, p) = (ds.n(), ds.p());
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    let mut seen = vec![0usize; p];
    for i in 0..n {
        for (j, v) in ds.x().row_entries(i) {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
            seen[j] += 1;
        }
    }
    // row_entries skips zeros, which still belong to the range
    for j in 0..p {
        if seen[j] < n {
            lo[j] = lo[j].min(0.0);
            hi[j] = hi[j].max(0.0);
        }
    }
    let map = |j: usize, v: f64| {
        if hi[j] > lo[j] {
            (2.0 * (v - lo[j]) / (hi[j] - lo[j]) - 1.0).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    };
    let keeps_zero = (0..p).all(|j| seen[j] == 0 || map(j, 0.0) == 0.0);
    let x = match ds.x() {
        DesignMatrix::Sparse(_) if keeps_zero => {
            let rows: Vec<Vec<(usize, f64)>> = (0..n)
                .map(|i| {
                    ds.x()
                        .row_entries(i)
                        .into_iter()
                        .map(|(j, v)| (j, map(j, v)))
                        .filter(|&(_, v)| v != 0.0)
                        .collect()
                })
                .collect();
            DesignMatrix::Sparse(CsrMatrix::from_rows(p, &rows).expect("rows stay valid"))
        }
        _ => {
            let dense = ds.x().to_dense();
            DesignMatrix::Dense(DMatrix::from_fn(n, p, |i, j| map(j, dense[(i, j)])))
        }
    };
    rebuild(ds, x)
}

fn rebuild(ds: &Dataset, x: DesignMatrix) -> Dataset {
    Dataset::new(x, ds.y().to_vec()).expect("shape and labels are unchanged")
}
