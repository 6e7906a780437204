//! Newton iteration on the stationary equation, and an IHT baseline.
//!
//! Each Newton step only factors the `s x s` block `H_TT` of the Hessian.
//! With `T = T_k` and `z = z^k` (supported inside the previous support), the
//! update is
//!
//! ```text
//! H_TT v       = H_T. z - g_T
//! z+_T         = v,                 z+_Tc = 0
//! d+_T         = 0,                 d+_Tc = g_Tc + (H (z+ - z))_Tc
//! ```
//!
//! `H_T. z` and `H (z+ - z)` are applied as `X^T D (X w) / n`, where `X w` only
//! touches the at most `2s` columns carrying `w`. No `p x p` matrix is formed;
//! one step costs `O(s^3 + s^2 n + n p)`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, Dataset, Evaluation};
use crate::stationarity::{self, Iterate, Stationarity};
use crate::support::SupportSet;

/// Solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Sparsity level, `1 <= s <= p`.
    pub s: usize,
    pub tau0: f64,
    /// Factor applied to `tau` when the decay rule fires, in `(0, 1)`.
    pub tau_decay: f64,
    /// Stop once `||F(u; T)|| < epsilon`.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Ridge added to `H_TT` when its Cholesky factorization fails.
    pub ridge_mu: f64,
    /// Starting point; the origin when absent.
    pub z0: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            s: 1,
            tau0: 1.0,
            tau_decay: 0.1,
            epsilon: 1e-6,
            max_iter: 1000,
            ridge_mu: 1e-10,
            z0: None,
        }
    }
}

impl SolverConfig {
    pub fn with_sparsity(s: usize) -> Self {
        Self {
            s,
            ..Self::default()
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.s == 0 || self.s > p {
            return Err(Error::arg(format!(
                "sparsity s = {} must satisfy 1 <= s <= p = {p}",
                self.s
            )));
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(Error::arg("tau0 must be positive"));
        }
        if !(self.tau_decay > 0.0 && self.tau_decay < 1.0) {
            return Err(Error::arg("tau_decay must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::arg("epsilon must be positive"));
        }
        if !(self.ridge_mu >= 0.0 && self.ridge_mu.is_finite()) {
            return Err(Error::arg("ridge_mu must be nonnegative"));
        }
        if let Some(z0) = &self.z0 {
            if z0.len() != p {
                return Err(Error::arg("z0 has the wrong length"));
            }
            if z0.iter().any(|v| !v.is_finite()) {
                return Err(Error::arg("z0 has non-finite entries"));
            }
            if z0.iter().filter(|&&v| v != 0.0).count() > self.s {
                return Err(Error::arg("z0 has more than s nonzeros"));
            }
        }
        Ok(())
    }
}

/// One line of the iteration trace, recorded before the step is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// `||F_tau(u^k; T_k)||`.
    pub residual: f64,
    pub tau: f64,
    pub support: SupportSet,
    pub tie_at_boundary: bool,
    pub loss: f64,
    pub grad_norm: f64,
    /// Seconds since the loop started.
    pub elapsed: f64,
    /// The step leaving this iterate needed the ridge fallback.
    pub ridge_used: bool,
}

/// What the final point is known to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimality {
    /// Strong stationary with fewer than `s` nonzeros, or with a vanishing gradient.
    GlobalMinimizer,
    /// Strong stationary with exactly `s` nonzeros.
    LocalMinimizer,
    /// Nothing beyond the class reported.
    Unknown,
}

impl std::fmt::Display for Optimality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Optimality::GlobalMinimizer => "global_minimizer",
            Optimality::LocalMinimizer => "local_minimizer",
            Optimality::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solver: String,
    pub z_final: Vec<f64>,
    pub converged: bool,
    /// Number of steps taken.
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub tau_final: f64,
    pub final_residual: f64,
    pub loss: f64,
    pub grad_norm: f64,
    pub stationarity_class: Stationarity,
    /// The final support was one of several valid choices; the class above
    /// holds for the selected support only.
    pub tie_flag: bool,
    pub optimality: Optimality,
    /// Wall time of the iteration loop in seconds.
    pub time_seconds: f64,
    /// Set when the loop aborted on a numeric failure.
    pub error: Option<String>,
}

impl SolverReport {
    pub fn nnz(&self) -> usize {
        self.z_final.iter().filter(|&&v| v != 0.0).count()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `s`-th largest magnitude of `z` (zero when `z` has fewer nonzeros).
fn kth_largest_magnitude(z: &[f64], s: usize) -> f64 {
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    if mags.len() < s {
        return 0.0;
    }
    let (_, kth, _) = mags.select_nth_unstable_by(s - 1, |a, b| b.total_cmp(a));
    *kth
}

/// Adaptive `tau` rule.
///
/// Decays `tau_k` by `decay` when `tau_k >= [z^k]_s / max_{j not in T} |d_j|`
/// and the residual is still above `1/k`; otherwise keeps it. A vanishing
/// off-support `d` makes the threshold infinite, so `tau` is kept.
pub fn tau_update(
    tau_k: f64,
    z_k: &[f64],
    d_k: &[f64],
    t_k: &SupportSet,
    residual_norm: f64,
    k: usize,
    decay: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::arg("tau_update requires k >= 1"));
    }
    if !(tau_k > 0.0) {
        return Err(Error::arg("tau must be positive"));
    }
    let mask = t_k.mask(z_k.len());
    let dmax = d_k
        .iter()
        .zip(&mask)
        .filter(|(_, &inside)| !inside)
        .fold(0.0f64, |m, (d, _)| m.max(d.abs()));
    if dmax == 0.0 {
        return Ok(tau_k);
    }
    let threshold = kth_largest_magnitude(z_k, t_k.len()) / dmax;
    if tau_k >= threshold && residual_norm > 1.0 / k as f64 {
        Ok(tau_k * decay)
    } else {
        Ok(tau_k)
    }
}

fn cholesky_solve(h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    h.cholesky().map(|c| c.solve(rhs))
}

/// Newton step given the evaluation at `u.z`. Returns the next iterate and
/// whether the ridge fallback was used.
pub(crate) fn newton_step_eval(
    ds: &Dataset,
    u: &Iterate,
    eval: &Evaluation,
    t: &SupportSet,
    ridge_mu: f64,
) -> Result<(Iterate, bool)> {
    let n = ds.n() as f64;
    let p = ds.p();
    let s = t.len();
    let cols = t.indices();

    // X_T once; both the block and the right-hand side come from it.
    let xt = ds.x().gather_columns(cols);
    let w = &eval.weights;
    let mut scaled = xt.clone();
    for mut col in scaled.column_iter_mut() {
        for (v, wi) in col.iter_mut().zip(w) {
            *v *= wi.sqrt();
        }
    }
    let mut h = scaled.transpose() * &scaled;
    h /= n;
    for i in 0..s {
        for j in 0..i {
            let m = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = m;
            h[(j, i)] = m;
        }
    }
    // H_T. z = X_T^T D (X z) / n
    let dm: Vec<f64> = eval.margins.iter().zip(w).map(|(m, wi)| m * wi).collect();
    let hz = xt.tr_mul(&DVector::from_vec(dm)) / n;
    let rhs = DVector::from_iterator(s, (0..s).map(|k| hz[k] - eval.gradient[cols[k]]));

    let mut ridge_used = false;
    let v = match cholesky_solve(h.clone(), &rhs) {
        Some(v) => v,
        None => {
            ridge_used = true;
            let mut hr = h;
            for i in 0..s {
                hr[(i, i)] += ridge_mu;
            }
            cholesky_solve(hr, &rhs).ok_or_else(|| Error::Numeric {
                message: format!("reduced Hessian block singular even with ridge {ridge_mu:e}"),
                support: Some(cols.to_vec()),
                partial: None,
            })?
        }
    };
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric {
            message: "non-finite Newton solution".into(),
            support: Some(cols.to_vec()),
            partial: None,
        });
    }

    let mut z_next = vec![0.0; p];
    for (k, &j) in cols.iter().enumerate() {
        z_next[j] = v[k];
    }
    // step direction lives on T union supp(z)
    let touched = t.union(&SupportSet::support_of(&u.z));
    let delta: Vec<f64> = touched.indices().iter().map(|&j| z_next[j] - u.z[j]).collect();
    let x_delta = ds.x().matvec_sparse(touched.indices(), &delta);
    let weighted: Vec<f64> = x_delta.iter().zip(w).map(|(a, b)| a * b).collect();
    let h_delta = ds.x().tr_matvec(&weighted);

    let mask = t.mask(p);
    let d_next: Vec<f64> = (0..p)
        .map(|j| {
            if mask[j] {
                0.0
            } else {
                eval.gradient[j] + h_delta[j] / n
            }
        })
        .collect();
    Ok((Iterate { z: z_next, d: d_next }, ridge_used))
}

/// One full Newton step on `F(.; T_k)` from `u_k`.
///
/// `t_prev` must contain the support of `u_k.z`; it identifies the columns
/// of `H_{T_k, T_prev}` that act on `z^k`.
pub fn newton_step(
    ds: &Dataset,
    u_k: &Iterate,
    t_k: &SupportSet,
    t_prev: &SupportSet,
    ridge_mu: f64,
) -> Result<Iterate> {
    ds.check_point(&u_k.z)?;
    ds.check_support(t_k)?;
    ds.check_support(t_prev)?;
    if u_k.d.len() != ds.p() {
        return Err(Error::arg("d has the wrong length"));
    }
    if let Some(j) = u_k
        .z
        .iter()
        .enumerate()
        .find(|(j, &v)| v != 0.0 && !t_prev.contains(*j))
        .map(|(j, _)| j)
    {
        return Err(Error::arg(format!(
            "z has a nonzero at index {j} outside the previous support"
        )));
    }
    let eval = model::evaluate(ds, &u_k.z)?;
    newton_step_eval(ds, u_k, &eval, t_k, ridge_mu).map(|(u, _)| u)
}

/// Tolerance used when classifying the final point of a converged run.
fn certificate_tol(cfg: &SolverConfig) -> f64 {
    (10.0 * cfg.epsilon).max(stationarity::DEFAULT_ZERO_TOL)
}

fn optimality_of(class: Stationarity, z: &[f64], grad_norm: f64, cfg: &SolverConfig, tol: f64) -> Optimality {
    if class != Stationarity::Strong {
        return Optimality::Unknown;
    }
    let nnz = z.iter().filter(|v| v.abs() > tol).count();
    if nnz < cfg.s || grad_norm <= cfg.epsilon {
        Optimality::GlobalMinimizer
    } else {
        Optimality::LocalMinimizer
    }
}

struct LoopState {
    trace: Vec<TraceRecord>,
    converged: bool,
    error: Option<String>,
}

fn finish(
    ds: &Dataset,
    cfg: &SolverConfig,
    name: &str,
    z: Vec<f64>,
    tau: f64,
    state: LoopState,
    started: Instant,
) -> Result<SolverReport> {
    let time_seconds = started.elapsed().as_secs_f64();
    let eval = model::evaluate(ds, &z)?;
    let grad_norm = norm(&eval.gradient);
    let tol = certificate_tol(cfg);
    let class = stationarity::classify_with_gradient(&z, &eval.gradient, tau, cfg.s, tol)?;
    let last = state.trace.last();
    Ok(SolverReport {
        solver: name.to_string(),
        iterations: state.trace.len().saturating_sub(1),
        final_residual: last.map_or(f64::NAN, |r| r.residual),
        tie_flag: last.is_some_and(|r| r.tie_at_boundary),
        optimality: optimality_of(class, &z, grad_norm, cfg, tol),
        stationarity_class: class,
        loss: eval.loss,
        grad_norm,
        z_final: z,
        converged: state.converged,
        trace: state.trace,
        tau_final: tau,
        time_seconds,
        error: state.error,
    })
}

/// Newton method on the stationary equation.
///
/// Starting from `d^0 = grad l(z^0)`, each iteration selects `T_k`, checks the
/// residual against `epsilon`, updates `tau` and takes a full Newton step.
/// Numeric failures end the loop with `converged = false` and the message in
/// [`SolverReport::error`]; only invalid arguments are returned as `Err`.
pub fn nslr_solve(ds: &Dataset, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate(ds.p())?;
    let p = ds.p();
    let started = Instant::now();
    let z0 = cfg.z0.clone().unwrap_or_else(|| vec![0.0; p]);
    let mut eval = model::evaluate(ds, &z0)?;
    let mut u = Iterate {
        d: eval.gradient.clone(),
        z: z0,
    };
    let mut tau = cfg.tau0;
    let mut state = LoopState {
        trace: Vec::new(),
        converged: false,
        error: None,
    };

    for k in 0.. {
        let sel = stationarity::select_support(&u, tau, cfg.s)?;
        let t = sel.support;
        let res = stationarity::residual_norm_with_gradient(&u, &eval.gradient, &t.mask(p));
        state.trace.push(TraceRecord {
            iteration: k,
            residual: res,
            tau,
            support: t.clone(),
            tie_at_boundary: sel.tie_at_boundary,
            loss: eval.loss,
            grad_norm: norm(&eval.gradient),
            elapsed: started.elapsed().as_secs_f64(),
            ridge_used: false,
        });
        if res < cfg.epsilon {
            state.converged = true;
            break;
        }
        if k >= cfg.max_iter {
            break;
        }
        let tau_next = if k >= 1 {
            tau_update(tau, &u.z, &u.d, &t, res, k, cfg.tau_decay)?
        } else {
            tau
        };
        match newton_step_eval(ds, &u, &eval, &t, cfg.ridge_mu) {
            Ok((next, ridge)) => {
                if let Some(rec) = state.trace.last_mut() {
                    rec.ridge_used = ridge;
                }
                u = next;
                eval = Evaluation::from_margins(ds, model::margins(ds, &u.z));
            }
            Err(e) => {
                state.error = Some(e.to_string());
                break;
            }
        }
        tau = tau_next;
    }
    // classify with the tau that selected the final support
    let tau_final = state.trace.last().map_or(tau, |r| r.tau);
    finish(ds, cfg, "nslr", u.z, tau_final, state, started)
}

/// Step size used by [`iht_solve`]: `min(tau0, 1 / lambda_x)`.
pub fn iht_step_size(ds: &Dataset, cfg: &SolverConfig) -> Result<f64> {
    let c = model::constants(ds)?;
    Ok(if c.lambda_x > 0.0 {
        cfg.tau0.min(1.0 / c.lambda_x)
    } else {
        cfg.tau0
    })
}

/// Iterative hard thresholding `z+ = P_S(z - tau grad l(z))` with a fixed step.
///
/// Uses the same stopping rule as [`nslr_solve`], evaluated at `u = (z, grad l(z))`.
pub fn iht_solve(ds: &Dataset, cfg: &SolverConfig) -> Result<SolverReport> {
    cfg.validate(ds.p())?;
    let tau = iht_step_size(ds, cfg)?;
    let p = ds.p();
    let started = Instant::now();
    let mut z = cfg.z0.clone().unwrap_or_else(|| vec![0.0; p]);
    let mut state = LoopState {
        trace: Vec::new(),
        converged: false,
        error: None,
    };
    for k in 0.. {
        let eval = Evaluation::from_margins(ds, model::margins(ds, &z));
        let u = Iterate {
            z,
            d: eval.gradient,
        };
        let sel = stationarity::select_support(&u, tau, cfg.s)?;
        let mask = sel.support.mask(p);
        let res = stationarity::residual_norm_with_gradient(&u, &u.d, &mask);
        state.trace.push(TraceRecord {
            iteration: k,
            residual: res,
            tau,
            support: sel.support.clone(),
            tie_at_boundary: sel.tie_at_boundary,
            loss: eval.loss,
            grad_norm: norm(&u.d),
            elapsed: started.elapsed().as_secs_f64(),
            ridge_used: false,
        });
        if res < cfg.epsilon || k >= cfg.max_iter {
            state.converged = res < cfg.epsilon;
            z = u.z;
            break;
        }
        z = (0..p)
            .map(|j| if mask[j] { u.z[j] - tau * u.d[j] } else { 0.0 })
            .collect();
    }
    finish(ds, cfg, "iht", z, tau, state, started)
}
