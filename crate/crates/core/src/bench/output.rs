//! CSV and JSON emission of benchmark results.

use std::io::Write;

use serde_json::{json, Value};

use super::{CellResult, RunResult};
use crate::error::Result;

pub const CSV_HEADER: &str = "p,n,s,rho,solver,loss,grad_norm,ser,time_s,nnz,converged";

/// Shortest round-trip form, scientific outside `[1e-4, 1e6)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "nan".into()
    } else if a == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// One row per `(cell, solver)` with trial means. `converged` is the fraction
/// of converged trials; `rho` is empty when the source has none. A cell whose
/// trials all failed reports `nan` indicators.
pub fn write_csv<W: Write>(results: &[CellResult], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in results {
        let rho = r.cell.rho.map(num).unwrap_or_default();
        let fields: [f64; 6] = match &r.averages {
            Some(a) => [a.loss, a.grad_norm, a.ser, a.time_seconds, a.nnz, a.converged],
            None => [f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0.0],
        };
        let fields: Vec<String> = fields.iter().map(|&v| num(v)).collect();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.cell.p,
            r.cell.n,
            r.cell.s,
            rho,
            r.solver,
            fields.join(",")
        )?;
    }
    out.flush()?;
    Ok(())
}

fn trial_json(run: Option<&RunResult>, trial: usize, seed: u64, error: Option<&String>) -> Value {
    json!({
        "trial": trial,
        "seed": seed,
        "indicators": run.map(|r| &r.indicators),
        "test": run.and_then(|r| r.test.as_ref()),
        "trace": run.map(|r| &r.trace),
        "error": error,
    })
}

/// Sidecar document `{cells: [{config, averages, trials: [{indicators, trace, ..}]}]}`.
pub fn to_json(results: &[CellResult]) -> Value {
    let cells: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "config": {
                    "p": r.cell.p,
                    "n": r.cell.n,
                    "s": r.cell.s,
                    "rho": r.cell.rho,
                    "solver": r.solver,
                    "solver_config": r.solver_config,
                },
                "averages": r.averages,
                "trials": r.trials.iter().map(|t| trial_json(t.run.as_ref(), t.trial, t.seed, t.error.as_ref())).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "cells": cells })
}

pub fn write_json<W: Write>(results: &[CellResult], mut out: W) -> Result<()> {
    let text = serde_json::to_string_pretty(&to_json(results)).expect("results serialize");
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
