//! Optimality machinery for `min l(z) s.t. ||z||_0 <= s`.
//!
//! A point `z` is strong tau-stationary when `z = P_S(z - tau * grad l(z))`.
//! Writing `u = (z, d)` with `d` standing in for the gradient, and `T` for the
//! indices of the `s` largest `|z_i - tau d_i|`, this is equivalent to the
//! stationary equation
//!
//! ```text
//! F(u; T) = [ d_T ; z_Tc ; d_T - grad_T l(z) ; d_Tc - grad_Tc l(z) ] = 0
//! ```
//!
//! where `Tc` is the complement of `T`. The solver applies Newton's method
//! to `F`; this module provides the pieces it is built from and the dense
//! Jacobian routines used to check it on small instances.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, Dataset};
use crate::support::SupportSet;

/// Default absolute tolerance for zero tests, scaled by `max(1, ||d||_inf)`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Largest `p` accepted by the dense Jacobian routines.
pub const JACOBIAN_CAP: usize = 64;

/// Primal point `z` and gradient surrogate `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub z: Vec<f64>,
    pub d: Vec<f64>,
}

impl Iterate {
    pub fn new(z: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        if z.len() != d.len() {
            return Err(Error::arg("z and d must have the same length"));
        }
        if z.iter().chain(&d).any(|v| !v.is_finite()) {
            return Err(Error::arg("iterate has non-finite entries"));
        }
        Ok(Self { z, d })
    }

    /// `(z, grad l(z))`.
    pub fn at(ds: &Dataset, z: Vec<f64>) -> Result<Self> {
        let d = model::gradient(ds, &z)?;
        Ok(Self { z, d })
    }

    pub fn p(&self) -> usize {
        self.z.len()
    }
}

/// Result of picking the working support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSelection {
    pub support: SupportSet,
    /// The s-th and (s+1)-th largest magnitudes coincide, so the choice of
    /// support is not unique.
    pub tie_at_boundary: bool,
}

/// Stationarity class of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stationarity {
    Strong,
    Plain,
    None,
}

impl std::fmt::Display for Stationarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stationarity::Strong => "strong",
            Stationarity::Plain => "plain",
            Stationarity::None => "none",
        })
    }
}

/// Stacked stationary residual and its Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub vector: Vec<f64>,
    pub norm: f64,
}

fn check_sparsity(s: usize, p: usize) -> Result<()> {
    if s == 0 || s > p {
        return Err(Error::arg(format!("sparsity s = {s} must satisfy 1 <= s <= p = {p}")));
    }
    Ok(())
}

/// Indices of the `s` largest magnitudes, smallest index first among equals,
/// plus whether the boundary value is tied. Expected `O(p + s log s)`.
pub(crate) fn top_s(magnitudes: &[f64], s: usize) -> (Vec<usize>, bool) {
    let p = magnitudes.len();
    let mut idx: Vec<usize> = (0..p).collect();
    let order = |a: &usize, b: &usize| {
        magnitudes[*b]
            .total_cmp(&magnitudes[*a])
            .then_with(|| a.cmp(b))
    };
    if s < p {
        idx.select_nth_unstable_by(s - 1, order);
    }
    let tie = if s < p {
        let kth = magnitudes[idx[s - 1]];
        let next = idx[s..]
            .iter()
            .map(|&i| magnitudes[i])
            .fold(f64::NEG_INFINITY, f64::max);
        next == kth
    } else {
        false
    };
    idx.truncate(s);
    idx.sort_unstable();
    (idx, tie)
}

/// Hard-thresholding projection onto `{||z||_0 <= s}`.
///
/// Keeps the `s` entries of largest magnitude (ties resolved toward the
/// smallest index) and zeroes the rest.
pub fn project_sparse(z: &[f64], s: usize) -> Result<Vec<f64>> {
    check_sparsity(s, z.len())?;
    let mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    let (keep, _) = top_s(&mags, s);
    let mut out = vec![0.0; z.len()];
    for i in keep {
        out[i] = z[i];
    }
    Ok(out)
}

/// Working support `T(u; tau)`: the `s` largest `|z_i - tau d_i|`.
pub fn select_support(u: &Iterate, tau: f64, s: usize) -> Result<SupportSelection> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::arg(format!("tau must be positive, got {tau}")));
    }
    check_sparsity(s, u.p())?;
    let mags: Vec<f64> = u
        .z
        .iter()
        .zip(&u.d)
        .map(|(z, d)| (z - tau * d).abs())
        .collect();
    let (idx, tie) = top_s(&mags, s);
    Ok(SupportSelection {
        support: SupportSet::new(idx, u.p())?,
        tie_at_boundary: tie,
    })
}

/// `F(u; T)` given the gradient at `u.z`.
pub(crate) fn residual_with_gradient(u: &Iterate, grad: &[f64], t: &SupportSet) -> Residual {
    let p = u.p();
    let tc = t.complement(p);
    let mut v = Vec::with_capacity(2 * p);
    v.extend(t.indices().iter().map(|&i| u.d[i]));
    v.extend(tc.iter().map(|&i| u.z[i]));
    v.extend(t.indices().iter().map(|&i| u.d[i] - grad[i]));
    v.extend(tc.iter().map(|&i| u.d[i] - grad[i]));
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    Residual { vector: v, norm }
}

/// Norm of `F(u; T)` without materializing the stacked vector.
pub(crate) fn residual_norm_with_gradient(u: &Iterate, grad: &[f64], mask: &[bool]) -> f64 {
    let mut acc = 0.0;
    for i in 0..u.p() {
        let e = u.d[i] - grad[i];
        let lead = if mask[i] { u.d[i] } else { u.z[i] };
        acc += lead * lead + e * e;
    }
    acc.sqrt()
}

/// Stationary residual `F(u; T)` in block order `[d_T, z_Tc, d_T - g_T, d_Tc - g_Tc]`.
pub fn residual(ds: &Dataset, u: &Iterate, t: &SupportSet) -> Result<Residual> {
    ds.check_point(&u.z)?;
    ds.check_support(t)?;
    if u.d.len() != ds.p() {
        return Err(Error::arg("d has the wrong length"));
    }
    let grad = model::gradient(ds, &u.z)?;
    Ok(residual_with_gradient(u, &grad, t))
}

/// Classifies `z` using the sign conditions on `grad l(z)`.
///
/// With `d = grad l(z)`: strong when `||z||_0 < s` and `d = 0`, or when
/// `||z||_0 = s`, `d` vanishes on the support and `|d_i| < [z]_s / tau` off it.
/// Plain relaxes the last inequality to `<=`. Zero tests use
/// `tol * max(1, ||d||_inf)`; entries of `z` below that are treated as zero.
pub fn classify_stationary(
    ds: &Dataset,
    z: &[f64],
    tau: f64,
    s: usize,
    tol: f64,
) -> Result<Stationarity> {
    let d = model::gradient(ds, z)?;
    classify_with_gradient(z, &d, tau, s, tol)
}

pub(crate) fn classify_with_gradient(
    z: &[f64],
    d: &[f64],
    tau: f64,
    s: usize,
    tol: f64,
) -> Result<Stationarity> {
    if !(tau > 0.0) {
        return Err(Error::arg("tau must be positive"));
    }
    check_sparsity(s, z.len())?;
    let dinf = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = tol * dinf.max(1.0);
    let on: Vec<usize> = (0..z.len()).filter(|&i| z[i].abs() > eps).collect();
    let nnz = on.len();
    if nnz > s {
        return Ok(Stationarity::None);
    }
    if nnz < s {
        return Ok(if dinf <= eps {
            Stationarity::Strong
        } else {
            Stationarity::None
        });
    }
    if on.iter().any(|&i| d[i].abs() > eps) {
        return Ok(Stationarity::None);
    }
    let smallest = on.iter().map(|&i| z[i].abs()).fold(f64::INFINITY, f64::min);
    let threshold = smallest / tau;
    let off_max = (0..z.len())
        .filter(|&i| z[i].abs() <= eps)
        .map(|i| d[i].abs())
        .fold(0.0f64, f64::max);
    Ok(if off_max < threshold - eps {
        Stationarity::Strong
    } else if off_max <= threshold + eps {
        Stationarity::Plain
    } else {
        Stationarity::None
    })
}

fn check_cap(p: usize) -> Result<()> {
    if p > JACOBIAN_CAP {
        return Err(Error::arg(format!(
            "dense Jacobian is verification-only and limited to p <= {JACOBIAN_CAP} (got {p})"
        )));
    }
    Ok(())
}

/// Variable order `[z_T, z_Tc, d_T, d_Tc]` as positions into `(z, d)`.
/// Entries `< p` address `z`, entries `>= p` address `d` shifted by `p`.
pub fn jacobian_variable_order(t: &SupportSet, p: usize) -> Vec<usize> {
    let tc = t.complement(p);
    t.indices()
        .iter()
        .chain(&tc)
        .copied()
        .chain(t.indices().iter().chain(&tc).map(|&i| i + p))
        .collect()
}

/// Dense `2p x 2p` Jacobian of `F(.; T)` at `u`.
///
/// Rows follow the residual block order, columns the variable order
/// `[z_T, z_Tc, d_T, d_Tc]`:
///
/// ```text
/// [  0      0      I_s  0   ]
/// [  0      I_r    0    0   ]
/// [ -H_TT  -H_TTc  I_s  0   ]
/// [ -H_TcT -H_TcTc 0    I_r ]
/// ```
pub fn jacobian_dense(ds: &Dataset, u: &Iterate, t: &SupportSet) -> Result<DMatrix<f64>> {
    let p = ds.p();
    check_cap(p)?;
    ds.check_point(&u.z)?;
    ds.check_support(t)?;
    let s = t.len();
    let r = p - s;
    let order: Vec<usize> = t.indices().iter().copied().chain(t.complement(p)).collect();
    let h = model::hessian_block(ds, &u.z, &SupportSet::full(p), &SupportSet::full(p))?;
    let hp = h.select_rows(order.iter()).select_columns(order.iter());

    let mut j = DMatrix::zeros(2 * p, 2 * p);
    for k in 0..s {
        j[(k, p + k)] = 1.0;
        j[(p + k, p + k)] = 1.0;
    }
    for k in 0..r {
        j[(s + k, s + k)] = 1.0;
        j[(p + s + k, p + s + k)] = 1.0;
    }
    j.view_mut((p, 0), (p, p)).copy_from(&(-hp));
    Ok(j)
}

/// Closed-form inverse of [`jacobian_dense`], built from `(H_TT)^{-1}` and the
/// Schur-type block `R = H_TcTc - H_TcT (H_TT)^{-1} H_TTc`.
///
/// Requires the columns of `X` indexed by `T` to be linearly independent.
pub fn jacobian_inverse_formula(ds: &Dataset, u: &Iterate, t: &SupportSet) -> Result<DMatrix<f64>> {
    let p = ds.p();
    check_cap(p)?;
    ds.check_point(&u.z)?;
    ds.check_support(t)?;
    let lam = restricted_min_eigenvalue(ds, t)?;
    let gram_scale = ds.x().gather_columns(t.indices()).norm_squared().max(1.0);
    if lam <= 1e-12 * gram_scale {
        return Err(Error::Condition(format!(
            "columns on T are linearly dependent (lambda_min = {lam:e})"
        )));
    }
    let s = t.len();
    let r = p - s;
    let order: Vec<usize> = t.indices().iter().copied().chain(t.complement(p)).collect();
    let h = model::hessian_block(ds, &u.z, &SupportSet::full(p), &SupportSet::full(p))?;
    let hp = h.select_rows(order.iter()).select_columns(order.iter());
    let h_tt = hp.view((0, 0), (s, s)).into_owned();
    let h_ttc = hp.view((0, s), (s, r)).into_owned();
    let h_tct = hp.view((s, 0), (r, s)).into_owned();
    let h_tctc = hp.view((s, s), (r, r)).into_owned();
    let a_inv = h_tt
        .cholesky()
        .ok_or_else(|| Error::Condition("H_TT is not positive definite".into()))?
        .inverse();

    let b = &h_tct * &a_inv; // H_TcT H_TT^{-1}
    let schur = &h_tctc - &b * &h_ttc;
    let mut inv = DMatrix::zeros(2 * p, 2 * p);
    // rows for z_T
    inv.view_mut((0, 0), (s, s)).copy_from(&a_inv);
    inv.view_mut((0, s), (s, r)).copy_from(&(-(&a_inv * &h_ttc)));
    inv.view_mut((0, p), (s, s)).copy_from(&(-&a_inv));
    // rows for z_Tc
    for k in 0..r {
        inv[(s + k, s + k)] = 1.0;
    }
    // rows for d_T
    for k in 0..s {
        inv[(p + k, k)] = 1.0;
    }
    // rows for d_Tc
    inv.view_mut((p + s, 0), (r, s)).copy_from(&b);
    inv.view_mut((p + s, s), (r, r)).copy_from(&schur);
    inv.view_mut((p + s, p), (r, s)).copy_from(&(-&b));
    for k in 0..r {
        inv[(p + s + k, p + s + k)] = 1.0;
    }
    Ok(inv)
}

/// `lambda_min(X_T^T X_T)`, clamped at zero.
pub fn restricted_min_eigenvalue(ds: &Dataset, t: &SupportSet) -> Result<f64> {
    ds.check_support(t)?;
    if t.is_empty() {
        return Err(Error::arg("support must be nonempty"));
    }
    let xt = ds.x().gather_columns(t.indices());
    let gram = xt.transpose() * &xt;
    let eig = SymmetricEigen::new(gram);
    Ok(eig.eigenvalues.min().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DesignMatrix;
    use approx::assert_relative_eq;

    fn three_point_instance() -> Dataset {
        let x = DesignMatrix::from_row_major(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        Dataset::new(x, vec![0.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_sparse(&[3.0, -1.0, 2.0], 2).unwrap(), vec![3.0, 0.0, 2.0]);
        assert_eq!(project_sparse(&[2.0, -2.0, 1.0], 1).unwrap(), vec![2.0, 0.0, 0.0]);
        assert_eq!(project_sparse(&[0.0, 4.0, 0.0], 2).unwrap(), vec![0.0, 4.0, 0.0]);
        assert!(project_sparse(&[1.0], 0).is_err());
        assert!(project_sparse(&[1.0], 2).is_err());
    }

    #[test]
    fn selection_examples() {
        let u = Iterate::new(vec![0.5, -0.9, 0.2], vec![0.0; 3]).unwrap();
        let sel = select_support(&u, 1.0, 2).unwrap();
        assert_eq!(sel.support.indices(), &[0, 1]);
        assert!(!sel.tie_at_boundary);

        let u = Iterate::new(vec![1.0, -1.0, 0.5], vec![0.0; 3]).unwrap();
        let sel = select_support(&u, 1.0, 1).unwrap();
        assert_eq!(sel.support.indices(), &[0]);
        assert!(sel.tie_at_boundary);

        let u = Iterate::new(vec![0.0, 3.0, 0.0, 0.0, -1.0], vec![0.0; 5]).unwrap();
        let sel = select_support(&u, 0.5, 3).unwrap();
        assert_eq!(sel.support.indices(), &[0, 1, 4]);
        assert!(sel.tie_at_boundary);

        assert!(select_support(&u, 0.0, 1).is_err());
    }

    #[test]
    fn selection_uses_the_gradient_step() {
        // z - tau d = (1 - 2, 0 - 0.5 * -4) = (-1, 2)
        let u = Iterate::new(vec![1.0, 0.0], vec![4.0, -4.0]).unwrap();
        let sel = select_support(&u, 0.5, 1).unwrap();
        assert_eq!(sel.support.indices(), &[1]);
    }

    #[test]
    fn residual_at_origin_with_true_gradient() {
        let ds = three_point_instance();
        let u = Iterate::at(&ds, vec![0.0; 3]).unwrap();
        let t = SupportSet::new(vec![0, 2], 3).unwrap();
        let r = residual(&ds, &u, &t).unwrap();
        let g = &u.d;
        assert_eq!(r.vector.len(), 6);
        assert_relative_eq!(r.norm, (g[0] * g[0] + g[2] * g[2]).sqrt(), epsilon = 1e-15);
        assert_eq!(&r.vector[3..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn three_point_gradient_and_classes() {
        let ds = three_point_instance();
        let z = [1.0, -1.0, 0.0];
        let g = model::gradient(&ds, &z).unwrap();
        assert_relative_eq!(g[0], 0.0, epsilon = 1e-16);
        assert_relative_eq!(g[1], 0.0, epsilon = 1e-16);
        assert_relative_eq!(g[2], -1.0 / 6.0, epsilon = 1e-16);

        let c = |tau| classify_stationary(&ds, &z, tau, 2, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(c(1.0), Stationarity::Strong);
        assert_eq!(c(5.9), Stationarity::Strong);
        assert_eq!(c(6.0), Stationarity::Plain);
        assert_ne!(c(10.0), Stationarity::Strong);
        assert_eq!(c(10.0), Stationarity::None);
    }

    #[test]
    fn classification_below_sparsity_needs_zero_gradient() {
        let ds = three_point_instance();
        assert_eq!(
            classify_stationary(&ds, &[1.0, -1.0, 0.0], 1.0, 3, DEFAULT_ZERO_TOL).unwrap(),
            Stationarity::None
        );
        // 2 nonzeros already exceed s = 1
        assert_eq!(
            classify_stationary(&ds, &[1.0, -1.0, 0.0], 1.0, 1, DEFAULT_ZERO_TOL).unwrap(),
            Stationarity::None
        );
    }

    #[test]
    fn jacobian_identity_design() {
        let x = DesignMatrix::from_row_major(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let ds = Dataset::new(x, vec![1.0, 0.0]).unwrap();
        let u = Iterate::at(&ds, vec![0.0, 0.0]).unwrap();
        let t = SupportSet::new(vec![0], 2).unwrap();
        let j = jacobian_dense(&ds, &u, &t).unwrap();
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(4, 4, &[
            0.0,     0.0,     1.0, 0.0,
            0.0,     1.0,     0.0, 0.0,
            -0.125,  0.0,     1.0, 0.0,
            0.0,     -0.125,  0.0, 1.0,
        ]);
        assert_relative_eq!(j, expect, epsilon = 1e-16);

        let inv = jacobian_inverse_formula(&ds, &u, &t).unwrap();
        assert_relative_eq!(inv[(0, 0)], 8.0, epsilon = 1e-12);
        // R(z) = H_TcTc = 1/8
        assert_relative_eq!(inv[(3, 1)], 0.125, epsilon = 1e-15);
        assert_relative_eq!(&j * &inv, DMatrix::identity(4, 4), epsilon = 1e-12);
    }

    #[test]
    fn jacobian_refuses_large_p() {
        let p = JACOBIAN_CAP + 1;
        let x = DesignMatrix::from_row_major(1, p, &vec![1.0; p]).unwrap();
        let ds = Dataset::new(x, vec![1.0]).unwrap();
        let u = Iterate::at(&ds, vec![0.0; p]).unwrap();
        let t = SupportSet::new(vec![0], p).unwrap();
        assert!(matches!(jacobian_dense(&ds, &u, &t), Err(Error::Argument(_))));
    }

    #[test]
    fn inverse_formula_rejects_dependent_columns() {
        let x = DesignMatrix::from_row_major(3, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 1.0, 0.0, 0.0, 3.0])
            .unwrap();
        let ds = Dataset::new(x, vec![1.0, 0.0, 1.0]).unwrap();
        let u = Iterate::at(&ds, vec![0.0; 3]).unwrap();
        let t = SupportSet::new(vec![0, 1], 3).unwrap();
        assert!(matches!(
            jacobian_inverse_formula(&ds, &u, &t),
            Err(Error::Condition(_))
        ));
        assert!(restricted_min_eigenvalue(&ds, &t).unwrap() < 1e-10);
    }

    #[test]
    fn restricted_eigenvalue_identity() {
        let x = DesignMatrix::from_row_major(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let ds = Dataset::new(x, vec![1.0, 0.0, 1.0]).unwrap();
        let t = SupportSet::new(vec![0, 1], 3).unwrap();
        assert_relative_eq!(restricted_min_eigenvalue(&ds, &t).unwrap(), 1.0, epsilon = 1e-14);
    }
}
