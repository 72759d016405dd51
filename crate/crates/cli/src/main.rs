//! `mapsel`: MAP model selection from the command line.
//!
//! Exit codes: 0 success, 1 domain error, 2 input error, 3 enumeration budget
//! exceeded.

mod commands;
mod data;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mapsel_core::diagnostics::DEFAULT_DIAG_BUDGET;
use mapsel_core::select::DEFAULT_BUDGET;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Domain(mapsel_core::Error),
}

impl From<mapsel_core::Error> for CliError {
    fn from(e: mapsel_core::Error) -> Self {
        CliError::Domain(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Domain(e @ mapsel_core::Error::BudgetExceeded { .. }) => write!(
                f,
                "{e}\nhint: raise --budget or use `mapsel ssvs` for a stochastic search"
            ),
            CliError::Domain(e) => write!(f, "error: {e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Domain(mapsel_core::Error::BudgetExceeded { .. }) => 3,
            CliError::Domain(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "mapsel", version, about = "MAP model selection for Gaussian linear regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact MAP model by exhaustive search.
    Select(SelectArgs),
    /// Stochastic search over models with a Gibbs sampler.
    Ssvs(SsvsArgs),
    /// Sparse eigenvalues and multicollinearity diagnostics of a design.
    Diagnose(DiagnoseArgs),
    /// Monte Carlo risk comparison of estimators.
    Simulate(SimulateArgs),
    /// Print the penalty schedule of a prior.
    Penalty(PenaltyArgs),
}

#[derive(Args)]
pub struct ModelArgs {
    /// CSV with a header row; the column `y` is the response.
    #[arg(long)]
    pub input: PathBuf,
    /// Model-size prior as inline JSON or a path to a JSON file.
    #[arg(long, default_value = r#"{"kind":"geometric","q":0.5}"#)]
    pub prior: String,
    /// Prior scale; defaults to the number of predictors.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Known noise variance.
    #[arg(long)]
    pub sigma_sq: Option<f64>,
    /// Estimate the noise variance from the saturated fit.
    #[arg(long, conflicts_with = "sigma_sq")]
    pub estimate_sigma: bool,
    /// Fit without an intercept (no centering).
    #[arg(long)]
    pub no_intercept: bool,
}

#[derive(Args)]
pub struct OutputArgs {
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Omit the metadata envelope, which carries a timestamp.
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Most models to enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args)]
pub struct SsvsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: u64,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of most visited models to report.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Also write the top-models table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args)]
pub struct DiagnoseArgs {
    /// CSV with a header row; a column named `y` is ignored.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub no_intercept: bool,
    /// Largest sparsity level; defaults to min(rank, 10).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Most column subsets enumerated per quantity before switching to a
    /// randomized search.
    #[arg(long, default_value_t = DEFAULT_DIAG_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Threshold on tau[r] separating nearly orthogonal from multicollinear.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    /// Check the multicollinearity assumption on kappa1..=kappa2.
    #[arg(long, requires = "kappa2")]
    pub kappa1: Option<usize>,
    #[arg(long, requires = "kappa1")]
    pub kappa2: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 0.01)]
    pub c3: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Scenario JSON: one scenario or an array of them.
    #[arg(long, alias = "input")]
    pub config: PathBuf,
    /// Override the seed of every scenario.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write one CSV row per estimator and scenario.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args)]
pub struct PenaltyArgs {
    /// Number of candidate predictors (or use --input).
    #[arg(long, required_unless_present = "input")]
    pub p: Option<usize>,
    /// Design rank; defaults to p.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Take p and the rank from a data file.
    #[arg(long, conflicts_with = "p")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub no_intercept: bool,
    #[arg(long, default_value = r#"{"kind":"geometric","q":0.5}"#)]
    pub prior: String,
    /// Defaults to p.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_sq: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(a) => commands::select(&a),
        Command::Ssvs(a) => commands::ssvs(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Penalty(a) => commands::penalty(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
