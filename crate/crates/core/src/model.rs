//! Logistic loss kernels.
//!
//! The loss is `l(z) = (1/n) sum_i [ln(1 + exp(<x_i, z>)) - y_i <x_i, z>]` with
//! labels `y_i` in `{0, 1}` and no intercept. All kernels work from the
//! margins `t_i = <x_i, z>` and evaluate the per-sample terms in a form that
//! cannot overflow: `ln(1 + e^t) - y t = softplus(-c t)` with `c = 2y - 1`, and
//! `softplus(u) = max(u, 0) + ln(1 + e^{-|u|})`.

use nalgebra::DMatrix;
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::support::SupportSet;

/// Sample matrix plus binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DesignMatrix,
    y: Vec<f64>,
}

impl Dataset {
    /// `y` must hold only `0.0` and `1.0`, one entry per row of `x`.
    pub fn new(x: DesignMatrix, y: Vec<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::arg("dataset needs n >= 1 and p >= 1"));
        }
        if y.len() != x.nrows() {
            return Err(Error::arg(format!(
                "label vector has length {}, matrix has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::arg(format!("label {bad} is not in {{0, 1}}")));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DesignMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `c = 2y - 1`, entries in `{-1, +1}`.
    pub fn signed_labels(&self) -> Vec<f64> {
        self.y.iter().map(|&v| 2.0 * v - 1.0).collect()
    }

    /// Row subset, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.iter().any(|&i| i >= self.n()) {
            return Err(Error::arg("row index out of range"));
        }
        Dataset::new(
            self.x.select_rows(rows),
            rows.iter().map(|&i| self.y[i]).collect(),
        )
    }

    pub(crate) fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.p() {
            return Err(Error::arg(format!(
                "point has length {}, expected p = {}",
                z.len(),
                self.p()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("point has non-finite entries"));
        }
        Ok(())
    }

    pub(crate) fn check_support(&self, t: &SupportSet) -> Result<()> {
        match t.indices().last() {
            Some(&j) if j >= self.p() => Err(Error::arg(format!(
                "support index {j} out of range for p = {}",
                self.p()
            ))),
            _ => Ok(()),
        }
    }
}

/// Smoothness constants of the loss for a given design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    /// Gradient Lipschitz constant `lambda_max(X^T X) / (4n)`.
    pub lambda_x: f64,
    /// Hessian Lipschitz constant `12 lambda_x max_i ||x_i||_1`.
    pub gamma_x: f64,
}

/// `1 / (1 + e^{-t})` without overflow for any finite `t`.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^u)`.
pub fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Loss, gradient and Hessian weights at one point, sharing the margin pass.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `X z`.
    pub margins: Vec<f64>,
    pub loss: f64,
    pub gradient: Vec<f64>,
    /// Diagonal of `D(z)`.
    pub weights: Vec<f64>,
}

impl Evaluation {
    pub(crate) fn from_margins(ds: &Dataset, margins: Vec<f64>) -> Self {
        let n = ds.n() as f64;
        let mut loss = 0.0;
        let mut resid = Vec::with_capacity(margins.len());
        let mut weights = Vec::with_capacity(margins.len());
        for (&t, &y) in margins.iter().zip(ds.y()) {
            let (pos, neg) = (sigmoid(t), sigmoid(-t));
            if y == 1.0 {
                loss += softplus(-t);
                // h - 1 = -sigmoid(-t), exact for large margins
                resid.push(-neg);
            } else {
                loss += softplus(t);
                resid.push(pos);
            }
            weights.push(pos * neg);
        }
        let mut gradient = ds.x().tr_matvec(&resid);
        for g in &mut gradient {
            *g /= n;
        }
        Self {
            margins,
            loss: loss / n,
            gradient,
            weights,
        }
    }
}

/// Loss, gradient and Hessian weights at `z`.
pub fn evaluate(ds: &Dataset, z: &[f64]) -> Result<Evaluation> {
    ds.check_point(z)?;
    Ok(Evaluation::from_margins(ds, margins(ds, z)))
}

/// `X z`, using the nonzero pattern of `z`.
pub(crate) fn margins(ds: &Dataset, z: &[f64]) -> Vec<f64> {
    let (cols, vals): (Vec<usize>, Vec<f64>) = z
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, &v)| (j, v))
        .unzip();
    if cols.len() * 2 < ds.p() {
        ds.x().matvec_sparse(&cols, &vals)
    } else {
        ds.x().matvec(z)
    }
}

/// `h(z)`, the vector of predicted probabilities.
pub fn sigmoid_probs(ds: &Dataset, z: &[f64]) -> Result<Vec<f64>> {
    ds.check_point(z)?;
    Ok(margins(ds, z).into_iter().map(sigmoid).collect())
}

pub fn loss(ds: &Dataset, z: &[f64]) -> Result<f64> {
    ds.check_point(z)?;
    let n = ds.n() as f64;
    let total: f64 = margins(ds, z)
        .iter()
        .zip(ds.y())
        .map(|(&t, &y)| if y == 1.0 { softplus(-t) } else { softplus(t) })
        .sum();
    Ok(total / n)
}

/// `X^T (h(z) - y) / n`.
pub fn gradient(ds: &Dataset, z: &[f64]) -> Result<Vec<f64>> {
    Ok(evaluate(ds, z)?.gradient)
}

/// Diagonal of `D(z)`, entries `h_i (1 - h_i)`.
pub fn hessian_weights(ds: &Dataset, z: &[f64]) -> Result<Vec<f64>> {
    ds.check_point(z)?;
    Ok(margins(ds, z)
        .into_iter()
        .map(|t| sigmoid(t) * sigmoid(-t))
        .collect())
}

/// `X_rows^T diag(w) X_cols / n`, never touching columns outside `rows`/`cols`.
pub(crate) fn weighted_gram(
    x: &DesignMatrix,
    weights: &[f64],
    rows: &[usize],
    cols: &[usize],
) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    if rows == cols {
        let mut a = x.gather_columns(rows);
        let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        for mut col in a.column_iter_mut() {
            for (v, r) in col.iter_mut().zip(&roots) {
                *v *= r;
            }
        }
        let mut g = a.transpose() * &a;
        g /= n;
        // exact symmetry for the Cholesky factorization downstream
        for i in 0..g.nrows() {
            for j in 0..i {
                let m = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = m;
                g[(j, i)] = m;
            }
        }
        g
    } else {
        let a = x.gather_columns(rows);
        let mut b = x.gather_columns(cols);
        for mut col in b.column_iter_mut() {
            for (v, w) in col.iter_mut().zip(weights) {
                *v *= w;
            }
        }
        let mut g = a.transpose() * b;
        g /= n;
        g
    }
}

/// Hessian sub-block `X_rows^T D(z) X_cols / n`.
pub fn hessian_block(
    ds: &Dataset,
    z: &[f64],
    rows: &SupportSet,
    cols: &SupportSet,
) -> Result<DMatrix<f64>> {
    ds.check_support(rows)?;
    ds.check_support(cols)?;
    let w = hessian_weights(ds, z)?;
    Ok(weighted_gram(ds.x(), &w, rows.indices(), cols.indices()))
}

pub const POWER_ITERATION_TOL: f64 = 1e-8;
pub const POWER_ITERATION_CAP: usize = 1000;

/// Largest eigenvalue of `X^T X` by power iteration.
///
/// Stops when the Rayleigh quotient changes by less than `tol` relative.
/// Fails with [`Error::Numeric`] carrying the last estimate after `cap` sweeps.
pub fn gram_spectral_norm(x: &DesignMatrix, tol: f64, cap: usize) -> Result<f64> {
    let p = x.ncols();
    // fixed pseudo-random start so a structured design cannot be orthogonal to it
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed_1a3b_da7a);
    let mut v: Vec<f64> = (0..p)
        .map(|_| 0.5 + (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
        .collect();
    let mut norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    let mut estimate = 0.0;
    for _ in 0..cap {
        let xv = x.matvec(&v);
        let rayleigh: f64 = xv.iter().map(|a| a * a).sum();
        let w = x.tr_matvec(&xv);
        norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let converged = (rayleigh - estimate).abs() <= tol * rayleigh;
        estimate = rayleigh;
        if converged {
            return Ok(estimate);
        }
        v = w.into_iter().map(|a| a / norm).collect();
    }
    Err(Error::Numeric {
        message: format!("power iteration did not converge in {cap} iterations"),
        support: None,
        partial: Some(estimate),
    })
}

/// Smoothness constants `lambda_x` and `gamma_x`.
pub fn constants(ds: &Dataset) -> Result<ModelConstants> {
    let lmax = gram_spectral_norm(ds.x(), POWER_ITERATION_TOL, POWER_ITERATION_CAP)?;
    let lambda_x = lmax / (4.0 * ds.n() as f64);
    let max_l1 = ds.x().row_l1_norms().into_iter().fold(0.0, f64::max);
    Ok(ModelConstants {
        lambda_x,
        gamma_x: 12.0 * lambda_x * max_l1,
    })
}

/// `ln 2 - 1/4 + ||X z - c||^2 / (4n)`, an upper bound on the loss.
pub fn linear_loss_bound(ds: &Dataset, z: &[f64]) -> Result<f64> {
    ds.check_point(z)?;
    let n = ds.n() as f64;
    let sq: f64 = margins(ds, z)
        .iter()
        .zip(ds.y())
        .map(|(&t, &y)| {
            let r = t - (2.0 * y - 1.0);
            r * r
        })
        .sum();
    Ok(std::f64::consts::LN_2 - 0.25 + sq / (4.0 * n))
}

/// Least-squares point `z_T = V S^{-1} U^T c`, zero off `T`, with loss below `ln 2`.
///
/// Fails with [`Error::Condition`] when `X_T^T c = 0` (then `z = 0` is already
/// optimal) or when `X_T` does not have full column rank.
pub fn svd_descent_point(ds: &Dataset, t: &SupportSet) -> Result<Vec<f64>> {
    ds.check_support(t)?;
    if t.is_empty() {
        return Err(Error::arg("support must be nonempty"));
    }
    let xt = ds.x().gather_columns(t.indices());
    let c = nalgebra::DVector::from_vec(ds.signed_labels());
    let xtc = xt.tr_mul(&c);
    let scale = xt.iter().fold(0.0f64, |m, v| m.max(v.abs())) * (ds.n() as f64).sqrt();
    if xtc.amax() <= 1e-12 * scale.max(1.0) {
        return Err(Error::Condition(
            "X_T^T c = 0: the origin is a global minimizer".into(),
        ));
    }
    let svd = xt.svd(true, true);
    let smax = svd.singular_values.max();
    let rank_tol = smax * f64::EPSILON * (ds.n().max(t.len()) as f64);
    if svd.singular_values.iter().any(|&s| s <= rank_tol) {
        return Err(Error::Condition(format!(
            "X_T is rank deficient (|T| = {})",
            t.len()
        )));
    }
    let sol = svd
        .solve(&c, rank_tol)
        .map_err(|e| Error::numeric(e.to_string()))?;
    let mut z = vec![0.0; ds.p()];
    for (k, &j) in t.indices().iter().enumerate() {
        z[j] = sol[k];
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity(p: usize, scale: f64) -> DesignMatrix {
        let mut data = vec![0.0; p * p];
        for i in 0..p {
            data[i * p + i] = scale;
        }
        DesignMatrix::from_row_major(p, p, &data).unwrap()
    }

    fn ds(x: DesignMatrix, y: &[f64]) -> Dataset {
        Dataset::new(x, y.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_labels_and_lengths() {
        assert!(Dataset::new(identity(2, 1.0), vec![0.0, 2.0]).is_err());
        assert!(Dataset::new(identity(2, 1.0), vec![0.0]).is_err());
        let d = ds(identity(2, 1.0), &[0.0, 1.0]);
        assert!(loss(&d, &[0.0]).is_err());
        assert!(gradient(&d, &[0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn sigmoid_probs_examples() {
        let d = ds(identity(2, 1.0), &[1.0, 0.0]);
        assert_eq!(sigmoid_probs(&d, &[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let h = sigmoid_probs(&d, &[3f64.ln(), 0.0]).unwrap();
        assert_relative_eq!(h[0], 0.75, epsilon = 1e-15);
        assert_eq!(h[1], 0.5);
        assert!(sigmoid(-700.0) > 0.0);
        assert!(sigmoid(-800.0).is_finite() && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn loss_examples() {
        let d = ds(identity(3, 1.0), &[1.0, 1.0, 0.0]);
        assert_relative_eq!(loss(&d, &[0.0; 3]).unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
        let expected = ((1.0 + 1f64.exp()).ln() - 1.0 + 2.0 * 2f64.ln()) / 3.0;
        assert_relative_eq!(loss(&d, &[1.0, 0.0, 0.0]).unwrap(), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.56652, epsilon = 1e-5);

        let one = ds(DesignMatrix::from_row_major(1, 1, &[1.0]).unwrap(), &[1.0]);
        let l = loss(&one, &[800.0]).unwrap();
        assert!(l.is_finite() && l >= 0.0 && l < 1e-300);
        let zero = ds(DesignMatrix::from_row_major(1, 1, &[1.0]).unwrap(), &[0.0]);
        assert_relative_eq!(loss(&zero, &[800.0]).unwrap(), 800.0);
    }

    #[test]
    fn gradient_examples() {
        let d = ds(identity(2, 1.0), &[1.0, 0.0]);
        assert_eq!(gradient(&d, &[0.0, 0.0]).unwrap(), vec![-0.25, 0.25]);
    }

    #[test]
    fn hessian_weight_examples() {
        let d = ds(identity(2, 1.0), &[1.0, 0.0]);
        assert_eq!(hessian_weights(&d, &[0.0, 0.0]).unwrap(), vec![0.25, 0.25]);
        let w = hessian_weights(&d, &[3f64.ln(), 0.0]).unwrap();
        assert_relative_eq!(w[0], 0.1875, epsilon = 1e-16);
    }

    #[test]
    fn hessian_block_identity_design() {
        let d = ds(identity(2, 1.0), &[1.0, 0.0]);
        let z = [0.7, -1.3];
        let full = SupportSet::full(2);
        let h = hessian_block(&d, &z, &full, &full).unwrap();
        let w = hessian_weights(&d, &z).unwrap();
        assert_relative_eq!(h[(0, 0)], w[0] / 2.0, epsilon = 1e-16);
        assert_relative_eq!(h[(1, 1)], w[1] / 2.0, epsilon = 1e-16);
        assert_eq!(h[(0, 1)], 0.0);
        let bad = SupportSet::new(vec![5], 6).unwrap();
        assert!(hessian_block(&d, &z, &bad, &full).is_err());
    }

    #[test]
    fn hessian_block_at_origin_is_quarter_gram() {
        let x = DesignMatrix::from_row_major(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 2.0, 0.0, 1.0])
            .unwrap();
        let d = ds(x.clone(), &[1.0, 0.0, 1.0]);
        let t = SupportSet::new(vec![0, 2], 3).unwrap();
        let h = hessian_block(&d, &[0.0; 3], &t, &t).unwrap();
        let xt = x.gather_columns(&[0, 2]);
        let expect = xt.transpose() * &xt / 12.0;
        assert_relative_eq!(h, expect, epsilon = 1e-15);
    }

    #[test]
    fn constants_examples() {
        let c = constants(&ds(identity(2, 1.0), &[1.0, 0.0])).unwrap();
        assert_relative_eq!(c.lambda_x, 0.125, max_relative = 1e-8);
        assert_relative_eq!(c.gamma_x, 1.5, max_relative = 1e-8);
        let c = constants(&ds(identity(3, 2.0), &[1.0, 0.0, 1.0])).unwrap();
        assert_relative_eq!(c.lambda_x, 1.0 / 3.0, max_relative = 1e-8);
        assert_eq!(c.gamma_x, 12.0 * c.lambda_x * 2.0);
    }

    #[test]
    fn linear_bound_examples() {
        let d = ds(identity(3, 1.0), &[1.0, 1.0, 0.0]);
        assert_relative_eq!(
            linear_loss_bound(&d, &[0.0; 3]).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let b = linear_loss_bound(&d, &[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(b, std::f64::consts::LN_2 - 0.25 + 2.0 / 12.0, epsilon = 1e-15);
        assert_relative_eq!(b, 0.60981, epsilon = 1e-5);
        assert!(loss(&d, &[1.0, 0.0, 0.0]).unwrap() <= b);
    }

    #[test]
    fn svd_descent_point_examples() {
        let d = ds(identity(3, 1.0), &[1.0, 1.0, 0.0]);
        let z = svd_descent_point(&d, &SupportSet::new(vec![0], 3).unwrap()).unwrap();
        assert_relative_eq!(z[0], 1.0, epsilon = 1e-14);
        assert_eq!(&z[1..], &[0.0, 0.0]);
        assert!(loss(&d, &z).unwrap() < std::f64::consts::LN_2);

        let d = ds(identity(2, 1.0), &[1.0, 1.0]);
        let z = svd_descent_point(&d, &SupportSet::full(2)).unwrap();
        assert_relative_eq!(z[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(z[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(loss(&d, &z).unwrap(), (1.0 + (-1f64).exp()).ln(), epsilon = 1e-14);
    }

    #[test]
    fn svd_descent_point_degenerate_cases() {
        // symmetric rows with opposite labels: X^T c = 0
        let x = DesignMatrix::from_row_major(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let d = ds(x, &[1.0, 0.0]);
        let err = svd_descent_point(&d, &SupportSet::new(vec![0], 2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Condition(_)));

        // duplicated columns: rank deficient
        let x = DesignMatrix::from_row_major(2, 2, &[1.0, 1.0, 2.0, 2.0]).unwrap();
        let d = ds(x, &[1.0, 1.0]);
        let err = svd_descent_point(&d, &SupportSet::full(2)).unwrap_err();
        assert!(matches!(err, Error::Condition(_)));
    }
}
