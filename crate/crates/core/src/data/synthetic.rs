//! Synthetic designs: a two-class mean-shift model and AR(1) features with
//! labels drawn from a sparse logistic model.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::rng::SeededStream;
use super::{PreparedData, Provenance};
use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::model::{sigmoid, Dataset};

/// Two-class design: `x_i = y_i v_i 1 + w_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spec1 {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
}

/// AR(1) features with correlation `rho` and an `s`-sparse true parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spec2 {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub rho: f64,
    pub seed: u64,
}

impl Spec1 {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::arg("example 1 needs n >= 2 and p >= 1"));
        }
        Ok(())
    }
}

impl Spec2 {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.p < 1 {
            return Err(Error::arg("example 2 needs n >= 1 and p >= 1"));
        }
        if self.s < 1 || self.s > self.p {
            return Err(Error::arg(format!("s = {} must lie in 1..={}", self.s, self.p)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::arg(format!("rho = {} must lie in [0, 1]", self.rho)));
        }
        Ok(())
    }
}

/// Labels: a uniformly random set of `floor(n/2)` samples gets `y = 0`, the
/// rest `y = 1`. Features: `x_i = y_i v_i 1 + w_i`, `v_i ~ N(0, 1)`,
/// `w_i ~ N(0, I_p)`.
///
/// Draw order: the index sample, then per row `v_i` followed by `w_i1..w_ip`.
pub fn gen_example1(spec: Spec1) -> Result<PreparedData> {
    spec.validate()?;
    let Spec1 { n, p, seed } = spec;
    let mut rng = SeededStream::new(seed);
    let mut y = vec![1.0; n];
    for i in rng.sample_indices(n, n / 2) {
        y[i] = 0.0;
    }
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let shift = y[i] * rng.normal();
        for j in 0..p {
            x[(i, j)] = shift + rng.normal();
        }
    }
    Ok(PreparedData {
        train: Dataset::new(DesignMatrix::Dense(x), y)?,
        test: None,
        provenance: Provenance::Example1(spec),
        truth: None,
    })
}

/// `z*` has `s` standard-normal entries at uniformly chosen positions. Each row
/// follows `x_1 ~ N(0,1)`, `x_{j+1} = rho x_j + sqrt(1 - rho^2) v_j`, and
/// `P(y = 1 | x) = sigmoid(<x, z*>)`.
///
/// Draw order: support positions, their values, then per row the `p`
/// innovations followed by one uniform for the label.
pub fn gen_example2(spec: Spec2) -> Result<PreparedData> {
    spec.validate()?;
    let Spec2 { n, p, s, rho, seed } = spec;
    let mut rng = SeededStream::new(seed);
    let mut truth = vec![0.0; p];
    let positions = rng.sample_indices(p, s);
    for &j in &positions {
        truth[j] = rng.normal();
    }
    let innovation = (1.0 - rho * rho).max(0.0).sqrt();
    let mut x = DMatrix::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    let mut row = vec![0.0; p];
    for i in 0..n {
        row[0] = rng.normal();
        for j in 1..p {
            row[j] = rho * row[j - 1] + innovation * rng.normal();
        }
        let margin: f64 = positions.iter().map(|&j| row[j] * truth[j]).sum();
        y.push(if rng.uniform() < sigmoid(margin) { 1.0 } else { 0.0 });
        for j in 0..p {
            x[(i, j)] = row[j];
        }
    }
    Ok(PreparedData {
        train: Dataset::new(DesignMatrix::Dense(x), y)?,
        test: None,
        provenance: Provenance::Example2(spec),
        truth: Some(truth),
    })
}
