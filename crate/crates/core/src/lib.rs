//! Sparsity-constrained logistic regression solved by Newton's method on the
//! stationary equation, with an iterative hard-thresholding baseline.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: loss, gradient and Hessian kernels, smoothness constants.
//! - [`stationarity`]: sparse projection, support selection, the stationary
//!   residual and small-scale Jacobian checks.
//! - [`solver`]: the Newton loop (`nslr_solve`) and the IHT baseline.
//! - [`data`]: synthetic generators, LIBSVM I/O and normalization.
//! - [`bench`]: metrics, sweep orchestration and CSV/JSON output.
//!
//! Indices are 0-based in the API and 1-based in files and logs.

pub mod bench;
pub mod data;
pub mod error;
pub mod matrix;
pub mod model;
pub mod solver;
pub mod stationarity;
pub mod support;

pub use error::{Error, Result};
pub use matrix::{CsrMatrix, DesignMatrix};
pub use model::{Dataset, ModelConstants};
pub use support::SupportSet;
