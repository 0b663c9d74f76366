//! Command-line driver: data generation, completion, decomposition,
//! evaluation and parameter sweeps. See `roid --help`.

pub mod bench;
mod commands;
pub mod params;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] roid_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exit status for a run that finished but did not converge under `--strict`.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "roid",
    version,
    about = "Low-rank Tucker tensor completion and decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random exact-rank Tucker tensor.
    Generate(GenerateArgs),
    /// Sample observed entries of a dense tensor.
    Mask(MaskArgs),
    /// Add Gaussian noise to a dense tensor.
    Noise(NoiseArgs),
    /// Complete a tensor from observed entries (roid, groid, shooi).
    Complete(CompleteArgs),
    /// Decompose a fully known tensor (full, hooi).
    Decompose(DecomposeArgs),
    /// Score a predicted tensor against a reference and/or a labelled test set.
    Evaluate(EvaluateArgs),
    /// Run a parameter sweep and write one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Tensor sizes, e.g. 40,40,40
    #[arg(long)]
    dims: String,
    /// Multi-linear rank: one value or three
    #[arg(long)]
    rank: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MaskArgs {
    #[arg(long)]
    input: PathBuf,
    /// Fraction of entries to observe, in (0, 1]
    #[arg(long)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Observed entries (COO)
    #[arg(long)]
    out: PathBuf,
    /// Also write the unobserved entries here (COO)
    #[arg(long)]
    holdout: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Noise factor: standard deviation of the added noise
    #[arg(long)]
    nf: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Solver settings; each overrides the same key from a config file.
#[derive(Debug, Args, Default)]
struct SolverArgs {
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    /// Per-mode trace-norm weights, e.g. 0.5,0.25,0.25
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    rho0: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    rho_min: Option<String>,
    #[arg(long)]
    rho_max: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    maxiter: Option<String>,
    /// hosvd or random
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl SolverArgs {
    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("lambda", self.lambda.clone()),
            ("mu", self.mu.clone()),
            ("weights", self.weights.clone()),
            ("rho0", self.rho0.clone()),
            ("gamma", self.gamma.clone()),
            ("rho_min", self.rho_min.clone()),
            ("rho_max", self.rho_max.clone()),
            ("tol", self.tol.clone()),
            ("maxiter", self.maxiter.clone()),
            ("init", self.init.clone()),
            ("seed", self.seed.clone()),
        ]
    }
}

#[derive(Debug, Args)]
struct CompleteArgs {
    /// Flat key = value file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// roid, groid or shooi
    #[arg(long)]
    method: Option<String>,
    /// Observed entries (COO)
    #[arg(long)]
    obs: PathBuf,
    /// Core dims: one value or three
    #[arg(long)]
    rank: Option<String>,
    /// Completed tensor (dense)
    #[arg(long)]
    out: PathBuf,
    /// Results CSV with a single row
    #[arg(long)]
    report: Option<PathBuf>,
    /// Ground truth for the rse column
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Labelled test entries (COO, value > 0.5 is positive) for the auc column
    #[arg(long)]
    test: Option<PathBuf>,
    /// Per-iteration residual trace (CSV)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// groid: three Laplacian matrix files, `none` for no graph on a mode
    #[arg(long)]
    laplacians: Option<String>,
    /// groid: three affinity matrix files, `none` for no graph on a mode
    #[arg(long)]
    affinity: Option<String>,
    /// Exit with status 2 if the solver does not converge
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// full or hooi
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    rank: Option<String>,
    /// Reconstruction (dense)
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Ground truth for the rse column (defaults to the input)
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Sweep description (flat key = value file)
    #[arg(long, alias = "config")]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Concurrent runs (default: ROID_JOBS, then the number of CPUs)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    true_rank: Option<String>,
    /// Given core dims, e.g. 3..=12
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    ratio: Option<String>,
    #[arg(long)]
    nf: Option<String>,
    #[arg(long)]
    repetitions: Option<String>,
    #[arg(long)]
    graph_density: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// status: 0 on success, 1 on usage or runtime errors, 2 when `--strict` is
/// set and a solver did not converge.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let (strict, outcome) = match cli.command {
        Command::Generate(a) => (false, commands::generate(a)),
        Command::Mask(a) => (false, commands::mask(a)),
        Command::Noise(a) => (false, commands::noise(a)),
        Command::Complete(a) => (a.strict, commands::complete(a)),
        Command::Decompose(a) => (a.strict, commands::decompose(a)),
        Command::Evaluate(a) => (false, commands::evaluate(a)),
        Command::Bench(a) => (a.strict, bench::run_bench(a)),
    };
    match outcome {
        Ok(converged) if strict && !converged => EXIT_NOT_CONVERGED,
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
