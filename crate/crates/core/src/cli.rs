//! Command-line front end: `solve` runs one Newton iteration, `experiment`
//! regenerates a dataset. Each writes CSV files plus `manifest.json`.
//!
//! Exit codes: 0 success, 1 solver failure, 2 invalid arguments,
//! 3 matrix file that is not SPD with simple eigenvalues.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::error::Error;
use crate::experiments::{
    classify, random_start, run_basin_experiment, run_convergence_experiment,
    run_degeneracy_experiment, trial_stream, ExperimentSpec, Which, MATRIX_STREAM,
};
use crate::field::{verify_zero, OjaProblem};
use crate::geometry::Iterate;
use crate::io::{
    census_csv, convergence_csv, fmt_f64, read_matrix_file, read_start_file, start_text, trace_csv,
    OutputDir, RunManifest,
};
use crate::linalg::{random_spd_uniform, RngStream};
use crate::newton::{run_newton, InnerSolver, Method, SolverConfig, Status};

pub const SEED_ENV: &str = "OJA_NEWTON_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "oja-newton",
    version,
    about = "Newton methods for zeros of Oja's vector field"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one Newton iteration and write its trace.
    Solve(SolveArgs),
    /// Regenerate one of the experiment datasets.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Plain,
    Geometric,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Plain => Method::Plain,
            MethodArg::Geometric => Method::Geometric,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InnerArg {
    Dense,
    Krylov,
}

impl From<InnerArg> for InnerSolver {
    fn from(i: InnerArg) -> Self {
        match i {
            InnerArg::Dense => InnerSolver::Dense,
            InnerArg::Krylov => InnerSolver::Krylov,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WhichArg {
    Degeneracy,
    Basins,
    Convergence,
}

impl From<WhichArg> for Which {
    fn from(w: WhichArg) -> Self {
        match w {
            WhichArg::Degeneracy => Which::Degeneracy,
            WhichArg::Basins => Which::Basins,
            WhichArg::Convergence => Which::Convergence,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Matrix size; taken from --matrix-file when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Geometric)]
    pub method: MethodArg,
    #[arg(long = "max-iter", default_value_t = 50)]
    pub max_iter: usize,
    /// Residual tolerance on ||F|| (plain) or ||xi|| (geometric).
    #[arg(long, default_value_t = 1e-14)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = InnerArg::Krylov)]
    pub inner: InnerArg,
    /// Text file: a line with n, then n rows of n numbers.
    #[arg(long = "matrix-file")]
    pub matrix_file: Option<PathBuf>,
    /// Text file: a line with `n p`, then n rows of p numbers.
    #[arg(long = "x0-file")]
    pub x0_file: Option<PathBuf>,
    #[arg(long, default_value = "out/solve")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub which: WhichArg,
    /// Defaults to 100, 10000 or 20 trials depending on --which.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Defaults to out/<which>.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("matrix file rejected: {0}")]
    NotSpd(Error),
    #[error("solver stopped with status {0}")]
    Solver(&'static str),
    #[error("{0}")]
    Run(Error),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NotSpd(_) => 3,
            CliError::Solver(_) | CliError::Run(_) | CliError::Io(_) => 1,
        }
    }
}

/// Summary of a `solve` run, also written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub status: Status,
    pub iterations: usize,
    pub res_f: f64,
    pub res_xi: f64,
    pub orth_defect: f64,
    pub invariance_defect: f64,
    pub label: Option<String>,
    pub matrix_symmetry_defect: f64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args).map(|s| {
            println!(
                "{}",
                serde_json::to_string_pretty(&s).expect("summary serializes")
            );
        }),
        Command::Experiment(args) => cmd_experiment(&args).map(|m| {
            println!("wrote {} files to {}", m.outputs.len() + 1, m.out_dir);
        }),
    }
}

/// Parses `args` and runs, mapping every failure to its exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn problem_error(e: Error) -> CliError {
    match e {
        Error::InvalidProblem(_) | Error::Parse(_) => CliError::Usage(e.to_string()),
        other => CliError::Run(other),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<SolveSummary, CliError> {
    if !(args.tol >= 0.0 && args.tol.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tol must be a finite non-negative number, got {}",
            args.tol
        )));
    }
    let (a, symmetry_defect) = match &args.matrix_file {
        Some(path) => {
            let loaded = read_matrix_file(path).map_err(|e| match e {
                Error::Parse(_) => CliError::Usage(e.to_string()),
                other => CliError::NotSpd(other),
            })?;
            let n = loaded.spd.dim();
            if args.n.is_some_and(|m| m != n) {
                return Err(CliError::Usage(format!(
                    "--n {} disagrees with the {n}x{n} matrix file",
                    args.n.unwrap()
                )));
            }
            if args.p == 0 || args.p >= n {
                return Err(CliError::Usage(format!(
                    "need 0 < p < n, got n={n}, p={}",
                    args.p
                )));
            }
            (loaded.spd, loaded.symmetry_defect)
        }
        None => {
            let n = args.n.unwrap_or(6);
            if args.p == 0 || args.p >= n {
                return Err(CliError::Usage(format!(
                    "need 0 < p < n, got n={n}, p={}",
                    args.p
                )));
            }
            let a = random_spd_uniform(n, &mut RngStream::new(args.seed, MATRIX_STREAM))
                .map_err(problem_error)?;
            (a, 0.0)
        }
    };
    let problem = OjaProblem::new(a, args.p).map_err(problem_error)?;
    let (n, p) = (problem.n(), problem.p());

    let x0 = match &args.x0_file {
        Some(path) => {
            let x = read_start_file(path).map_err(problem_error)?;
            if x.shape() != (n, p) {
                return Err(CliError::Usage(format!(
                    "x0 file is {}x{}, expected {n}x{p}",
                    x.nrows(),
                    x.ncols()
                )));
            }
            Iterate::new(x).map_err(|e| CliError::Usage(format!("x0 file: {e}")))?
        }
        None => random_start(n, p, &mut RngStream::new(args.seed, trial_stream(0))),
    };

    let method = Method::from(args.method);
    let cfg = SolverConfig {
        max_outer_iters: args.max_iter,
        residual_tol: args.tol,
        inner_solver: args.inner.into(),
        ..SolverConfig::default()
    };
    let result = run_newton(&problem, x0, method, &cfg);

    let a_norm = problem.a().matrix().norm();
    let zero = verify_zero(&problem, &result.x, 1e-8 * a_norm);
    let summary = SolveSummary {
        status: result.status,
        iterations: result.iterations,
        res_f: zero.residual_f,
        res_xi: zero.residual_xi,
        orth_defect: zero.orthonormality_defect,
        invariance_defect: zero.invariance_defect,
        label: classify(result.x.matrix(), problem.a().spectral(), 1e-10).map(|l| l.to_string()),
        matrix_symmetry_defect: symmetry_defect,
    };

    let config = json!({
        "n": n,
        "p": p,
        "method": method,
        "solver": cfg,
        "matrix_file": args.matrix_file,
        "x0_file": args.x0_file,
        "matrix_stream": MATRIX_STREAM,
        "x0_stream": trial_stream(0),
    });
    let manifest = RunManifest::new("solve", args.seed, config, &args.out);
    let mut out = OutputDir::create(&args.out, manifest)?;
    out.write("trace.csv", &trace_csv(&result.trace))?;
    out.write("x_final.txt", &start_text(result.x.matrix()))?;
    out.write(
        "summary.json",
        &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"),
    )?;
    out.finish()?;

    match result.status {
        Status::SingularSystem | Status::RankLost => Err(CliError::Solver(result.status.as_str())),
        Status::Converged | Status::MaxIters => Ok(summary),
    }
}

fn file_name(prefix: &str, i: usize, trials: usize) -> String {
    let width = (trials.saturating_sub(1)).to_string().len().max(3);
    format!("{prefix}_{i:0width$}.csv")
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<RunManifest, CliError> {
    let which = Which::from(args.which);
    let mut spec = ExperimentSpec::for_which(which, args.seed);
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if args.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    spec.threads = args.threads;
    spec.validate().map_err(problem_error)?;

    let name = match which {
        Which::Degeneracy => "degeneracy",
        Which::Basins => "basins",
        Which::Convergence => "convergence",
    };
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| Path::new("out").join(name));
    let config = serde_json::to_value(&spec).expect("spec serializes");
    let manifest = RunManifest::new("experiment", spec.seed, config, &out_dir);

    match which {
        Which::Degeneracy => {
            let outcome = run_degeneracy_experiment(&spec).map_err(problem_error)?;
            let mut out = OutputDir::create(&out_dir, manifest)?;
            let mut summary =
                String::from("trial,status,min_res_F,min_res_iter,vertical_dominance\n");
            for (i, t) in outcome.trials.iter().enumerate() {
                out.write(&file_name("trace", i, spec.trials), &trace_csv(&t.trace))?;
                summary += &format!(
                    "{i},{},{},{},{}\n",
                    t.status.as_str(),
                    fmt_f64(t.min_residual),
                    t.min_residual_step.map_or(String::new(), |s| s.to_string()),
                    t.vertical_dominance().map_or(String::new(), fmt_f64),
                );
            }
            out.write("summary.csv", &summary)?;
            Ok(out.finish()?)
        }
        Which::Basins => {
            let outcome = run_basin_experiment(&spec).map_err(problem_error)?;
            let mut out = OutputDir::create(&out_dir, manifest)?;
            out.write("census.csv", &census_csv(&outcome.census))?;
            let mut trials = String::from("trial,label,status,iterations,res_xi,orth_defect\n");
            for (i, t) in outcome.trials.iter().enumerate() {
                trials += &format!(
                    "{i},{},{},{},{},{}\n",
                    t.label.as_ref().map_or(String::new(), |l| l.to_string()),
                    t.status.as_str(),
                    t.iterations,
                    fmt_f64(t.zero.residual_xi),
                    fmt_f64(t.zero.orthonormality_defect),
                );
            }
            out.write("trials.csv", &trials)?;
            Ok(out.finish()?)
        }
        Which::Convergence => {
            let outcome = run_convergence_experiment(&spec).map_err(problem_error)?;
            let mut out = OutputDir::create(&out_dir, manifest)?;
            let mut orders = String::from("trial,status,label,iterations,order\n");
            for (i, r) in outcome.runs.iter().enumerate() {
                out.write(&file_name("trace", i, spec.trials), &convergence_csv(r))?;
                orders += &format!(
                    "{i},{},{},{},{}\n",
                    r.status.as_str(),
                    r.label.as_ref().map_or(String::new(), |l| l.to_string()),
                    r.residuals.len() - 1,
                    r.order.map_or(String::new(), fmt_f64),
                );
            }
            out.write("orders.csv", &orders)?;
            Ok(out.finish()?)
        }
    }
}
