//! Self-check suite run by `nslr verify`: finite-difference oracles, the
//! closed-form Jacobian inverse and the smoothness bounds, on random small
//! instances.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::SeededStream;
use crate::error::Result;
use crate::matrix::DesignMatrix;
use crate::model::{self, Dataset};
use crate::stationarity::{jacobian_dense, jacobian_inverse_formula, Iterate};
use crate::support::SupportSet;

/// Outcome of one named check. `worst` is the largest observed error (or
/// bound violation) and `limit` the threshold it is compared against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub limit: f64,
    pub passed: bool,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<22} cases={:<4} worst={:.3e} limit={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.limit
        )
    }
}

pub const BOUND_SLACK: f64 = 1e-10;

fn outcome(name: &'static str, cases: usize, worst: f64, limit: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        cases,
        worst,
        limit,
        passed: worst <= limit,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn rel_err(approx: &[f64], exact: &[f64]) -> f64 {
    let diff: Vec<f64> = approx.iter().zip(exact).map(|(a, b)| a - b).collect();
    let scale = norm(exact);
    if scale > 0.0 {
        norm(&diff) / scale
    } else {
        norm(&diff)
    }
}

/// Gaussian design with random labels, `n in [lo_n, hi_n]`, `p in [lo_p, hi_p]`.
fn random_instance(rng: &mut SeededStream, n: (usize, usize), p: (usize, usize)) -> Dataset {
    let n = n.0 + rng.below(n.1 - n.0 + 1);
    let p = p.0 + rng.below(p.1 - p.0 + 1);
    let data: Vec<f64> = (0..n * p).map(|_| rng.normal()).collect();
    let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.uniform() < 0.5))).collect();
    let x = DesignMatrix::from_row_major(n, p, &data).expect("shape matches");
    Dataset::new(x, y).expect("labels are binary")
}

fn random_point(rng: &mut SeededStream, p: usize, scale: f64) -> Vec<f64> {
    (0..p).map(|_| scale * rng.normal()).collect()
}

fn fd_step(z: &[f64]) -> f64 {
    1e-5 * z.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Central differences of the loss against the analytic gradient.
pub fn check_gradient(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut rng = SeededStream::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let ds = random_instance(&mut rng, (2, 30), (1, 12));
        let z = random_point(&mut rng, ds.p(), 0.5);
        let h = fd_step(&z);
        let mut fd = vec![0.0; ds.p()];
        for j in 0..ds.p() {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[j] += h;
            zm[j] -= h;
            fd[j] = (model::loss(&ds, &zp)? - model::loss(&ds, &zm)?) / (2.0 * h);
        }
        worst = worst.max(rel_err(&fd, &model::gradient(&ds, &z)?));
    }
    Ok(outcome("gradient_fd", cases, worst, 1e-6))
}

/// Central differences of the gradient against the full Hessian.
pub fn check_hessian(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut rng = SeededStream::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let ds = random_instance(&mut rng, (2, 30), (1, 12));
        let p = ds.p();
        let z = random_point(&mut rng, p, 0.5);
        let full = SupportSet::full(p);
        let hess = model::hessian_block(&ds, &z, &full, &full)?;
        let h = fd_step(&z);
        let mut fd = DMatrix::zeros(p, p);
        for j in 0..p {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[j] += h;
            zm[j] -= h;
            let (gp, gm) = (model::gradient(&ds, &zp)?, model::gradient(&ds, &zm)?);
            for i in 0..p {
                fd[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        worst = worst.max(rel_err(fd.as_slice(), hess.as_slice()));
    }
    Ok(outcome("hessian_fd", cases, worst, 1e-5))
}

/// `J * J_inv - I` in max-abs norm on random instances with `p <= 10`, `s <= 4`.
pub fn check_jacobian_inverse(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let mut rng = SeededStream::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let ds = random_instance(&mut rng, (10, 20), (2, 10));
        let p = ds.p();
        let s = 1 + rng.below(p.min(4));
        let t = SupportSet::from_unsorted(rng.sample_indices(p, s), p)?;
        let u = Iterate::new(random_point(&mut rng, p, 0.5), random_point(&mut rng, p, 0.1))?;
        let j = jacobian_dense(&ds, &u, &t)?;
        let inv = jacobian_inverse_formula(&ds, &u, &t)?;
        let dev = (&j * &inv - DMatrix::<f64>::identity(2 * p, 2 * p)).amax();
        worst = worst.max(dev);
    }
    Ok(outcome("jacobian_inverse", cases, worst, 1e-8))
}

/// Largest violation of the strong-smoothness, Hessian-Lipschitz and linear
/// loss bounds, as three outcomes.
pub fn check_bounds(seed: u64, cases: usize) -> Result<Vec<CheckOutcome>> {
    let mut rng = SeededStream::new(seed);
    let (mut smooth, mut lipschitz, mut linear, mut weights) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cases {
        let ds = random_instance(&mut rng, (2, 25), (1, 10));
        let p = ds.p();
        let c = model::constants(&ds)?;
        let z = random_point(&mut rng, p, 1.0);
        let zz = random_point(&mut rng, p, 1.0);
        let diff: Vec<f64> = z.iter().zip(&zz).map(|(a, b)| a - b).collect();
        let dist = norm(&diff);

        let g = model::gradient(&ds, &zz)?;
        let inner: f64 = g.iter().zip(&diff).map(|(a, b)| a * b).sum();
        let upper = model::loss(&ds, &zz)? + inner + 0.5 * c.lambda_x * dist * dist;
        smooth = smooth.max(model::loss(&ds, &z)? - upper);

        let full = SupportSet::full(p);
        let dh = model::hessian_block(&ds, &z, &full, &full)?
            - model::hessian_block(&ds, &zz, &full, &full)?;
        lipschitz = lipschitz.max(dh.norm() - c.gamma_x * dist);

        linear = linear.max(model::loss(&ds, &z)? - model::linear_loss_bound(&ds, &z)?);

        for w in model::hessian_weights(&ds, &z)? {
            let out = if w <= 0.0 { 1.0 } else { (w - 0.25).max(0.0) };
            weights = weights.max(out);
        }
    }
    Ok(vec![
        outcome("strong_smoothness", cases, smooth.max(0.0), BOUND_SLACK),
        outcome("hessian_lipschitz", cases, lipschitz.max(0.0), BOUND_SLACK),
        outcome("linear_loss_bound", cases, linear.max(0.0), BOUND_SLACK),
        outcome("hessian_weights", cases, weights, 0.0),
    ])
}

/// Runs the whole suite from one base seed.
pub fn run_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![
        check_gradient(seed, 50)?,
        check_hessian(seed.wrapping_add(1), 50)?,
        check_jacobian_inverse(seed.wrapping_add(2), 20)?,
    ];
    out.extend(check_bounds(seed.wrapping_add(3), 100)?);
    Ok(out)
}
