use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nslr::bench::{self, output, verify, BenchConfig, SolverKind};
use nslr::data::{self, PreparedData, Spec1, Spec2};
use nslr::solver::SolverConfig;
use nslr::Error;

#[derive(Parser)]
#[command(name = "nslr", version, about = "Sparsity-constrained logistic regression solver and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one dataset with one solver and print its indicators.
    Solve(SolveArgs),
    /// Run a benchmark sweep described by a TOML config.
    Bench(BenchArgs),
    /// Write a synthetic dataset in LIBSVM format.
    Gen(GenArgs),
    /// Run the finite-difference, Jacobian and bound checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Nslr,
    Iht,
}

impl From<Solver> for SolverKind {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Nslr => SolverKind::Nslr,
            Solver::Iht => SolverKind::Iht,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preprocess {
    None,
    /// Rows then columns to mean 0, variance 1.
    Standardize,
    /// Columns mapped onto [-1, 1].
    UnitInterval,
}

#[derive(Args)]
struct SolveArgs {
    /// Training data in LIBSVM format.
    data: PathBuf,
    /// Sparsity level.
    #[arg(long)]
    s: usize,
    #[arg(long, value_enum, default_value = "nslr")]
    solver: Solver,
    /// Held-out data in LIBSVM format.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Without --test: keep the first M rows for training, the rest for testing.
    #[arg(long, value_name = "M")]
    train_size: Option<usize>,
    /// Feature count override.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_enum, default_value = "none")]
    preprocess: Preprocess,
    #[arg(long, default_value_t = 1.0)]
    tau0: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    ridge: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML config file.
    config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write zeros instead of wall times so output is byte-stable.
    #[arg(long)]
    no_time: bool,
    /// Main output format; the other one can be requested with --json.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON sidecar with per-trial indicators and traces.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    example: u8,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    /// True sparsity (example 2).
    #[arg(long, default_value_t = 1)]
    s: usize,
    /// Feature correlation (example 2).
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Manifest path; defaults to the output path with `.json` appended.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) | Error::Parse { .. } | Error::Io(_) => Failure::Usage(e.to_string()),
            Error::Condition(_) | Error::Numeric { .. } => Failure::Solver(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn preprocess(mut data: PreparedData, how: Preprocess) -> PreparedData {
    let f: fn(&nslr::Dataset) -> nslr::Dataset = match how {
        Preprocess::None => return data,
        Preprocess::Standardize => data::normalize_two_pass,
        Preprocess::UnitInterval => data::scale_to_unit_interval,
    };
    data.train = f(&data.train);
    data.test = data.test.as_ref().map(f);
    data
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let mut prepared = data::load_libsvm(&args.data, args.test.as_deref(), args.p)?;
    if let Some(m1) = args.train_size {
        if args.test.is_some() {
            return Err(Failure::Usage("--train-size cannot be combined with --test".into()));
        }
        prepared = prepared.split_first(m1)?;
    }
    let prepared = preprocess(prepared, args.preprocess);
    let cfg = SolverConfig {
        s: args.s,
        tau0: args.tau0,
        epsilon: args.eps,
        max_iter: args.max_iter,
        ridge_mu: args.ridge,
        ..SolverConfig::default()
    };
    let (run, report) = bench::run_once(args.solver.into(), &prepared, &cfg)?;
    let ind = &run.indicators;
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Text => {
            writeln!(out, "solver      {}", run.solver)?;
            writeln!(out, "loss        {:.6e}", ind.loss)?;
            writeln!(out, "grad_norm   {:.6e}", ind.grad_norm)?;
            writeln!(out, "ser         {}", ind.ser)?;
            writeln!(out, "time_s      {:.6}", ind.time_seconds)?;
            writeln!(out, "nnz         {}", ind.nnz)?;
            if let Some(t) = &run.test {
                writeln!(out, "loss_test   {:.6e}", t.loss_test)?;
                writeln!(out, "ser_test    {}", t.ser_test)?;
            }
            writeln!(out, "converged   {}", ind.converged)?;
            writeln!(out, "iterations  {}", ind.iterations)?;
            writeln!(out, "residual    {:.6e}", report.final_residual)?;
            writeln!(out, "class       {}", report.stationarity_class)?;
            writeln!(out, "optimality  {}", report.optimality)?;
        }
        Format::Csv => {
            writeln!(out, "solver,loss,grad_norm,ser,time_s,nnz,converged,iterations")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                run.solver, ind.loss, ind.grad_norm, ind.ser, ind.time_seconds, ind.nnz, ind.converged, ind.iterations
            )?;
        }
        Format::Json => {
            let support: Vec<(usize, f64)> = report
                .z_final
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, &v)| (i + 1, v))
                .collect();
            let doc = json!({
                "run": run,
                "stationarity_class": report.stationarity_class,
                "optimality": report.optimality,
                "tie_flag": report.tie_flag,
                "tau_final": report.tau_final,
                "final_residual": report.final_residual,
                "z": support,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"))?;
        }
    }
    out.flush()?;
    match report.error {
        Some(msg) => Err(Failure::Solver(msg)),
        None => Ok(()),
    }
}

fn run_bench(args: BenchArgs) -> Result<(), Failure> {
    let mut cfg = BenchConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.no_time {
        cfg.timing = false;
    }
    let results = bench::run_matrix(&cfg)?;
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Json => output::write_json(&results, &mut out)?,
        _ => output::write_csv(&results, &mut out)?,
    }
    out.flush()?;
    if let Some(path) = &args.json {
        output::write_json(&results, open_out(Some(path))?)?;
    }
    for r in &results {
        for t in r.trials.iter().filter(|t| t.error.is_some()) {
            eprintln!(
                "warning: p={} n={} s={} {} trial {}: {}",
                r.cell.p,
                r.cell.n,
                r.cell.s,
                r.solver,
                t.trial,
                t.error.as_deref().unwrap_or_default()
            );
        }
    }
    if !results.is_empty() && results.iter().all(|r| r.failed()) {
        return Err(Failure::Solver("every cell failed".into()));
    }
    Ok(())
}

fn generate(args: GenArgs) -> Result<(), Failure> {
    let prepared = match args.example {
        1 => data::gen_example1(Spec1 {
            n: args.n,
            p: args.p,
            seed: args.seed,
        })?,
        _ => data::gen_example2(Spec2 {
            n: args.n,
            p: args.p,
            s: args.s,
            rho: args.rho,
            seed: args.seed,
        })?,
    };
    data::serialize_libsvm(&prepared.train, open_out(Some(&args.out))?)?;
    let manifest_path = args.manifest.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".json");
        p.into()
    });
    let mut m = open_out(Some(&manifest_path))?;
    writeln!(m, "{}", prepared.manifest().to_json())?;
    m.flush()?;
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<(), Failure> {
    let checks = verify::run_suite(args.seed)?;
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&checks).expect("serializable")),
        _ => checks.iter().for_each(|c| println!("{c}")),
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Solver("verification failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => run_bench(a),
        Command::Gen(a) => generate(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
