mod commands;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::model::ModelArgs;

/// Exact computations, sampling and self-checks for Gibbs-type random
/// partitions.
#[derive(Debug, Parser)]
#[command(name = "gpk", version, about)]
struct Cli {
    #[command(flatten)]
    model: ModelArgs,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generalized Stirling number S(n, k; alpha), or its non-central variant.
    Stirling(StirlingArgs),
    /// Posterior laws of the number of new tables and of their occupants for
    /// a group of m arrivals.
    Predict(PredictArgs),
    /// Seat groups by sequential sampling and print one CSV row per replicate.
    Sample(SampleArgs),
    /// Run a named invariant suite; exits 4 if any check fails.
    Verify(VerifyArgs),
    /// Tabulate V(n, k) for the model as an explicit table.
    Table(TableArgs),
}

#[derive(Debug, Args)]
pub struct StirlingArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Non-central shift; omit for the central numbers.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Current block sizes in order of appearance, e.g. 3,2,1.
    #[arg(long, default_value = "")]
    pub sizes: String,
    /// Size of the arriving group.
    #[arg(long)]
    pub m: usize,
    /// Tolerance for the mean identity check.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value = "")]
    pub sizes: String,
    /// Group size per replicate.
    #[arg(long, conflicts_with = "n_total", required_unless_present = "n_total")]
    pub m: Option<usize>,
    /// Seat until this many customers in total.
    #[arg(long)]
    pub n_total: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Worker threads; the output does not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// normalization, stirling, group, conjecture8, deletion, avoidance,
    /// recursion or all.
    #[arg(long)]
    pub suite: String,
    /// Largest state size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Largest row for table checks.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Largest group size.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub nmax: usize,
    /// Multiply V(n, k) by a factor afterwards, as N,K,FACTOR.
    #[arg(long)]
    pub perturb: Option<String>,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Verification(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Verification(m) | CliError::Io(m) => m,
        }
    }
}

impl From<gpk_core::Error> for CliError {
    fn from(e: gpk_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GPK_LOG", "warn")).init();
    let cli = Cli::parse();
    let mut out = match output::open(cli.output.as_deref()) {
        Ok(w) => w,
        Err(e) => return fail(&e),
    };
    let result = match &cli.command {
        Command::Stirling(a) => commands::stirling(&cli.model, a, cli.format, &mut out),
        Command::Predict(a) => commands::predict(&cli.model, a, cli.format, &mut out),
        Command::Sample(a) => commands::sample(&cli.model, a, cli.format, &mut out),
        Command::Verify(a) => commands::verify(&cli.model, a, cli.format, &mut out),
        Command::Table(a) => commands::table(&cli.model, a, cli.format, &mut out),
    };
    let flushed = out.flush().map_err(CliError::from);
    match result.and(flushed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {}", e.message());
    ExitCode::from(e.code())
}
