//! `slpm`: fit, simulate and evaluate sparse latent position models.

mod commands;
mod error;
mod formats;
mod manifest;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;
use crate::formats::Format;

#[derive(Parser)]
#[command(name = "slpm", version, about = "Sparse latent position models for nonnegative weighted networks")]
struct Cli {
    /// Worker threads for data-parallel kernels (default: all cores).
    #[arg(long, env = "SLPM_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a weight matrix.
    Fit(FitArgs),
    /// Generate a synthetic network.
    Simulate(SimulateArgs),
    /// Compare a matrix with a reconstruction and summarise a fit.
    Evaluate(EvaluateArgs),
    /// Write plot-ready coordinates of the two largest components.
    ExportEmbedding(EmbedArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Mds,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CrossArg {
    Recip,
    Raw,
}

#[derive(Args)]
pub struct FitArgs {
    /// Weight matrix (CSV or MatrixMarket coordinate).
    pub input: PathBuf,
    /// Output directory for report.txt, reconstruction and manifest.txt.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Number of latent dimensions K.
    #[arg(long, default_value_t = 10)]
    pub dims: usize,
    /// Dirichlet hyperparameter δ.
    #[arg(long, default_value_t = 0.001)]
    pub delta: f64,
    /// Gamma shape hyperparameter.
    #[arg(long = "a", default_value_t = 1.0)]
    pub a: f64,
    /// Gamma rate hyperparameter.
    #[arg(long = "b", default_value_t = 1.0)]
    pub b: f64,
    /// Stop when a sweep raises the free energy by at most this much.
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "mds")]
    pub init: InitArg,
    /// Cross blocks of the dissimilarity matrix: 1/(X+ε) or X+ε.
    #[arg(long, value_enum, default_value = "recip")]
    pub init_cross: CrossArg,
    /// Constant added to weights before building dissimilarities.
    #[arg(long, default_value_t = 1e-4)]
    pub init_eps: f64,
    /// Rows and columns index the same nodes.
    #[arg(long)]
    pub square: bool,
    /// Leave self-edges out of the fit (needs --square).
    #[arg(long, requires = "square")]
    pub no_self_loops: bool,
    /// MatrixMarket entries not listed in the file are missing, not zero.
    #[arg(long)]
    pub absent_as_missing: bool,
    /// Mixing proportion above which a component counts as relevant.
    #[arg(long, default_value_t = 0.01)]
    pub tau: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Slpm,
    Homogeneous,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PositionsArg {
    /// Standard normal positions.
    Normal,
    /// Gamma-distributed precisions per component.
    Gamma,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NetworkArg {
    /// x_ij = Σ_k λ_k (U_ik − V_jk)⁻².
    Average,
    /// Exponential weights with sampled allocations.
    Sampled,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "slpm")]
    pub model: ModelArg,
    /// Number of senders.
    #[arg(long = "M")]
    pub m: usize,
    /// Number of receivers.
    #[arg(long = "N")]
    pub n: usize,
    /// True number of latent dimensions.
    #[arg(long = "Ktrue", default_value_t = 3)]
    pub k_true: usize,
    /// `uniform`, `dirichlet`, or comma-separated proportions.
    #[arg(long, default_value = "uniform")]
    pub mixing: String,
    #[arg(long, value_enum, default_value = "normal")]
    pub positions: PositionsArg,
    /// Dirichlet concentration and Gamma shape/rate for hierarchical draws.
    #[arg(long, default_value_t = 1.0)]
    pub hyper: f64,
    #[arg(long, value_enum, default_value = "average")]
    pub network: NetworkArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Reference matrix.
    #[arg(long)]
    pub truth: PathBuf,
    /// Predicted matrix, e.g. a fit's reconstruction.
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    /// Fit report whose mixing proportions give the dimension counts.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    pub tau: f64,
    /// Bins of the log-log histograms.
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub absent_as_missing: bool,
    /// Directory for evaluation.txt and manifest.txt; stdout only if omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EmbedArgs {
    /// Fit report.
    pub report: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        slpm::par::configure_threads(threads);
    }
    match cli.command {
        Command::Fit(args) => commands::fit(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::ExportEmbedding(args) => commands::export_embedding(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slpm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
