//! Benchmark configuration files (TOML).
//!
//! ```toml
//! trials = 10              # independent trials per cell (default 1)
//! seed = 0                 # base seed; trial t of cell c uses (seed ^ c) + t
//! solvers = ["nslr", "iht"]
//! timing = true            # false writes time_s = 0 for byte-stable output
//!
//! [source]
//! kind = "example2"        # "example1" | "example2" | "libsvm"
//! # libsvm only:
//! # path = "train.svm"
//! # test_path = "test.svm" # optional published test split
//! # train_size = 38        # without test_path: first rows train, rest test
//! # p = 7129               # optional feature count override
//!
//! [sweep]                  # cells are the product, p outermost, rho innermost
//! p = [1000]               # synthetic sources only
//! n_ratio = [0.2]          # n = round(ratio * p); or give n = [200]
//! s_ratio = [0.05]         # s = round(ratio * p); or give s = [50]
//! rho = [0.5]              # example2 only
//!
//! [solver]                 # every key optional
//! tau0 = 1.0
//! tau_decay = 0.1
//! epsilon = 1e-6
//! max_iter = 1000
//! ridge_mu = 1e-10
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SolverKind;
use crate::error::{Error, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Source {
    Example1,
    Example2,
    Libsvm {
        path: PathBuf,
        test_path: Option<PathBuf>,
        train_size: Option<usize>,
        p: Option<usize>,
    },
}

impl Source {
    pub fn is_synthetic(&self) -> bool {
        !matches!(self, Source::Libsvm { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub p: Option<Vec<usize>>,
    pub n: Option<Vec<usize>>,
    pub n_ratio: Option<Vec<f64>>,
    pub s: Option<Vec<usize>>,
    pub s_ratio: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tau0: Option<f64>,
    pub tau_decay: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    pub ridge_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    #[serde(default = "yes")]
    pub timing: bool,
    pub source: Source,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub solver: SolverSection,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

/// One point of the sweep. For file sources `p` and `n` describe the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub p: usize,
    pub n: usize,
    pub s: usize,
    pub rho: Option<f64>,
}

fn ratio_of(r: f64, p: usize) -> usize {
    (r * p as f64).round() as usize
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchConfig =
            toml::from_str(text).map_err(|e| Error::arg(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::arg("trials must be at least 1"));
        }
        if self.solvers.is_empty() {
            return Err(Error::arg("at least one solver is required"));
        }
        let sw = &self.sweep;
        if sw.s.is_some() == sw.s_ratio.is_some() {
            return Err(Error::arg("sweep needs exactly one of `s` and `s_ratio`"));
        }
        if self.source.is_synthetic() {
            if sw.p.as_ref().map_or(true, Vec::is_empty) {
                return Err(Error::arg("synthetic sources need a nonempty `sweep.p`"));
            }
            if sw.n.is_some() == sw.n_ratio.is_some() {
                return Err(Error::arg("sweep needs exactly one of `n` and `n_ratio`"));
            }
        } else if sw.p.is_some() || sw.n.is_some() || sw.n_ratio.is_some() {
            return Err(Error::arg("file sources take p and n from the data; remove them from the sweep"));
        }
        if sw.rho.is_some() && self.source != Source::Example2 {
            return Err(Error::arg("`sweep.rho` applies to example2 only"));
        }
        if let Some(rho) = &sw.rho {
            if rho.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::arg("rho values must lie in [0, 1]"));
            }
        }
        self.solver_config(1).validate(1)
    }

    pub fn solver_config(&self, s: usize) -> SolverConfig {
        let d = SolverConfig::with_sparsity(s);
        let o = &self.solver;
        SolverConfig {
            tau0: o.tau0.unwrap_or(d.tau0),
            tau_decay: o.tau_decay.unwrap_or(d.tau_decay),
            epsilon: o.epsilon.unwrap_or(d.epsilon),
            max_iter: o.max_iter.unwrap_or(d.max_iter),
            ridge_mu: o.ridge_mu.unwrap_or(d.ridge_mu),
            ..d
        }
    }

    /// Expands the sweep for synthetic sources.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let ps = self
            .sweep
            .p
            .clone()
            .ok_or_else(|| Error::arg("file sources expand their cells from the data"))?;
        let mut out = Vec::new();
        for p in ps {
            let ns: Vec<usize> = match (&self.sweep.n, &self.sweep.n_ratio) {
                (Some(n), _) => n.clone(),
                (None, Some(r)) => r.iter().map(|&r| ratio_of(r, p)).collect(),
                (None, None) => Vec::new(),
            };
            for n in ns {
                self.push_cells(&mut out, p, n);
            }
        }
        Ok(out)
    }

    /// Expands the sweep for a file source whose training split is `n x p`.
    pub fn cells_for_data(&self, p: usize, n: usize) -> Vec<Cell> {
        let mut out = Vec::new();
        self.push_cells(&mut out, p, n);
        out
    }

    fn push_cells(&self, out: &mut Vec<Cell>, p: usize, n: usize) {
        let ss: Vec<usize> = match (&self.sweep.s, &self.sweep.s_ratio) {
            (Some(s), _) => s.clone(),
            (None, Some(r)) => r.iter().map(|&r| ratio_of(r, p).max(1)).collect(),
            (None, None) => Vec::new(),
        };
        let rhos: Vec<Option<f64>> = match (&self.source, &self.sweep.rho) {
            (Source::Example2, Some(r)) => r.iter().copied().map(Some).collect(),
            (Source::Example2, None) => vec![Some(0.0)],
            _ => vec![None],
        };
        for &s in &ss {
            for &rho in &rhos {
                out.push(Cell { p, n, s, rho });
            }
        }
    }
}
