//! Indicators, experiment orchestration and the verification suite.

pub mod config;
pub mod output;
pub mod verify;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{gen_example1, gen_example2, load_libsvm, PreparedData, Spec1, Spec2};
use crate::error::{Error, Result};
use crate::model::{self, Dataset};
use crate::solver::{iht_solve, nslr_solve, SolverConfig, SolverReport, TraceRecord};

pub use config::{BenchConfig, Cell, Source};

/// Sign error rate: the fraction of samples with `y_i != [<x_i, z> > 0]`.
/// A score of exactly zero predicts class 0.
pub fn ser(ds: &Dataset, z: &[f64]) -> Result<f64> {
    ds.check_point(z)?;
    let wrong = model::margins(ds, z)
        .iter()
        .zip(ds.y())
        .filter(|&(&t, &y)| (t > 0.0) != (y == 1.0))
        .count();
    Ok(wrong as f64 / ds.n() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Nslr,
    Iht,
}

impl SolverKind {
    pub fn run(self, ds: &Dataset, cfg: &SolverConfig) -> Result<SolverReport> {
        match self {
            SolverKind::Nslr => nslr_solve(ds, cfg),
            SolverKind::Iht => iht_solve(ds, cfg),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Nslr => "nslr",
            SolverKind::Iht => "iht",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nslr" => Ok(SolverKind::Nslr),
            "iht" => Ok(SolverKind::Iht),
            other => Err(Error::arg(format!("unknown solver `{other}` (expected nslr or iht)"))),
        }
    }
}

/// Training-set indicators of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    pub loss: f64,
    pub grad_norm: f64,
    pub ser: f64,
    /// Solver loop only; data generation and parsing are excluded.
    pub time_seconds: f64,
    pub nnz: usize,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestIndicators {
    pub loss_test: f64,
    pub ser_test: f64,
}

/// One solver run on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub solver: SolverKind,
    pub seed: Option<u64>,
    pub config: SolverConfig,
    pub indicators: Indicators,
    pub test: Option<TestIndicators>,
    pub trace: Vec<TraceRecord>,
    /// Numeric failure inside the solver loop, if any.
    pub error: Option<String>,
}

/// Runs `solver` on the training split and scores the result on both splits.
///
/// The trace moves into the [`RunResult`]; the returned report keeps the rest.
pub fn run_once(
    solver: SolverKind,
    data: &PreparedData,
    cfg: &SolverConfig,
) -> Result<(RunResult, SolverReport)> {
    let mut report = solver.run(&data.train, cfg)?;
    let z = &report.z_final;
    let indicators = Indicators {
        loss: report.loss,
        grad_norm: report.grad_norm,
        ser: ser(&data.train, z)?,
        time_seconds: report.time_seconds,
        nnz: report.nnz(),
        converged: report.converged,
        iterations: report.iterations,
    };
    let test = match &data.test {
        Some(t) => Some(TestIndicators {
            loss_test: model::loss(t, z)?,
            ser_test: ser(t, z)?,
        }),
        None => None,
    };
    let result = RunResult {
        solver,
        seed: data.provenance.seed(),
        config: cfg.clone(),
        indicators,
        test,
        trace: std::mem::take(&mut report.trace),
        error: report.error.clone(),
    };
    Ok((result, report))
}

/// Arithmetic means over the successful trials of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub loss: f64,
    pub grad_norm: f64,
    pub ser: f64,
    pub time_seconds: f64,
    pub nnz: f64,
    /// Fraction of trials that converged.
    pub converged: f64,
    pub loss_test: Option<f64>,
    pub ser_test: Option<f64>,
}

impl Averages {
    fn of(trials: &[TrialOutcome]) -> Option<Self> {
        let ok: Vec<&RunResult> = trials.iter().filter_map(|t| t.run.as_ref()).collect();
        if ok.is_empty() {
            return None;
        }
        let k = ok.len() as f64;
        let mean = |f: &dyn Fn(&RunResult) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / k;
        let tests: Vec<TestIndicators> = ok.iter().filter_map(|r| r.test).collect();
        let (loss_test, ser_test) = if tests.len() == ok.len() {
            (
                Some(tests.iter().map(|t| t.loss_test).sum::<f64>() / k),
                Some(tests.iter().map(|t| t.ser_test).sum::<f64>() / k),
            )
        } else {
            (None, None)
        };
        Some(Averages {
            loss: mean(&|r| r.indicators.loss),
            grad_norm: mean(&|r| r.indicators.grad_norm),
            ser: mean(&|r| r.indicators.ser),
            time_seconds: mean(&|r| r.indicators.time_seconds),
            nnz: mean(&|r| r.indicators.nnz as f64),
            converged: mean(&|r| f64::from(u8::from(r.indicators.converged))),
            loss_test,
            ser_test,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub run: Option<RunResult>,
    pub error: Option<String>,
}

/// All trials of one `(cell, solver)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub solver: SolverKind,
    pub solver_config: SolverConfig,
    pub trials: Vec<TrialOutcome>,
    /// `None` when every trial failed.
    pub averages: Option<Averages>,
}

impl CellResult {
    pub fn failed(&self) -> bool {
        self.averages.is_none()
    }
}

/// Seed of trial `trial` in cell `cell_index`: `(base XOR cell_index) + trial`.
pub fn trial_seed(base: u64, cell_index: usize, trial: usize) -> u64 {
    (base ^ cell_index as u64).wrapping_add(trial as u64)
}

fn load_file_source(source: &Source) -> Result<PreparedData> {
    match source {
        Source::Libsvm {
            path,
            test_path,
            train_size,
            p,
        } => {
            let data = load_libsvm(path, test_path.as_deref(), *p)?;
            match train_size {
                Some(m1) if data.test.is_none() => data.split_first(*m1),
                _ => Ok(data),
            }
        }
        _ => Err(Error::arg("not a file source")),
    }
}

fn generate(source: &Source, cell: &Cell, seed: u64) -> Result<PreparedData> {
    match source {
        Source::Example1 => gen_example1(Spec1 {
            n: cell.n,
            p: cell.p,
            seed,
        }),
        Source::Example2 => gen_example2(Spec2 {
            n: cell.n,
            p: cell.p,
            s: cell.s,
            rho: cell.rho.unwrap_or(0.0),
            seed,
        }),
        Source::Libsvm { .. } => Err(Error::arg("file sources are loaded once, not generated")),
    }
}

/// Runs every cell of `config`, cells in parallel, and returns one result per
/// `(cell, solver)` in declared order.
///
/// Synthetic cells draw fresh data per trial from [`trial_seed`]; file
/// sources are loaded once and every trial reruns on the same data.
pub fn run_matrix(config: &BenchConfig) -> Result<Vec<CellResult>> {
    config.validate()?;
    let (cells, fixed) = if config.source.is_synthetic() {
        (config.cells()?, None)
    } else {
        let data = load_file_source(&config.source)?;
        (config.cells_for_data(data.train.p(), data.train.n()), Some(data))
    };
    let per_cell: Vec<Vec<CellResult>> = cells
        .par_iter()
        .enumerate()
        .map(|(index, cell)| run_cell(config, index, cell, fixed.as_ref()))
        .collect();
    Ok(per_cell.into_iter().flatten().collect())
}

fn run_cell(
    config: &BenchConfig,
    index: usize,
    cell: &Cell,
    fixed: Option<&PreparedData>,
) -> Vec<CellResult> {
    let mut outcomes: Vec<Vec<TrialOutcome>> = vec![Vec::new(); config.solvers.len()];
    for trial in 0..config.trials {
        let seed = trial_seed(config.seed, index, trial);
        let generated = match fixed {
            Some(_) => None,
            None => Some(generate(&config.source, cell, seed)),
        };
        let data: Result<&PreparedData> = match (&generated, fixed) {
            (Some(g), _) => g.as_ref().map_err(Clone::clone),
            (None, Some(f)) => Ok(f),
            (None, None) => unreachable!("either generated or fixed"),
        };
        for (k, &solver) in config.solvers.iter().enumerate() {
            let cfg = config.solver_config(cell.s);
            let outcome = match data.clone().and_then(|d| run_once(solver, d, &cfg)) {
                Ok((mut run, _)) => {
                    if !config.timing {
                        run.indicators.time_seconds = 0.0;
                        run.trace.iter_mut().for_each(|t| t.elapsed = 0.0);
                    }
                    let error = run.error.clone();
                    TrialOutcome {
                        trial,
                        seed,
                        run: Some(run),
                        error,
                    }
                }
                Err(e) => TrialOutcome {
                    trial,
                    seed,
                    run: None,
                    error: Some(e.to_string()),
                },
            };
            outcomes[k].push(outcome);
        }
    }
    config
        .solvers
        .iter()
        .zip(outcomes)
        .map(|(&solver, trials)| CellResult {
            cell: cell.clone(),
            solver,
            solver_config: config.solver_config(cell.s),
            averages: Averages::of(&trials),
            trials,
        })
        .collect()
}
