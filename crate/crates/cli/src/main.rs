//! `noisecontrib`: fit VAR models, decompose power spectra into noise
//! contributions, and run replay / Monte Carlo studies.
//!
//! Exit codes: 0 success, 2 user or configuration error, 3 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "noisecontrib", version, about)]
struct Cli {
    /// Worker threads for internal parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a VAR model to a CSV series and write model.json plus a fit report.
    Fit(FitArgs),
    /// Decompose each channel's power spectrum into noise contributions.
    Contrib(ContribArgs),
    /// Monte Carlo variance study under correlated-noise scenarios.
    Simulate(SimulateArgs),
    /// Replay the fitted recursion driven by individual residual channels.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    /// Ordinary least squares.
    Ls,
    /// Multivariate Yule-Walker equations.
    Yw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Classical,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// CSV file, one row per time step and one column per channel.
    #[arg(long)]
    pub input: PathBuf,
    /// The first line holds data, not channel names.
    #[arg(long)]
    pub no_header: bool,
    /// Time units per sample.
    #[arg(long, default_value_t = 1.0)]
    pub sampling_interval: f64,
    /// Use the series as given instead of removing column means.
    #[arg(long)]
    pub no_demean: bool,
}

#[derive(Debug, Args)]
pub struct CommonOut {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Output formats.
    #[arg(long, value_delimiter = ',', default_values = ["csv", "json"])]
    pub format: Vec<Format>,
}

impl CommonOut {
    pub fn wants(&self, f: Format) -> bool {
        self.format.contains(&f)
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("order_choice").required(true).args(["order", "max_order"]))]
pub struct FitArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Fit exactly this order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Select the order in 0..=max-order by AIC.
    #[arg(long)]
    pub max_order: Option<usize>,
    #[arg(long, value_enum, default_value_t = Estimator::Ls)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub out: CommonOut,
}

#[derive(Debug, Args)]
pub struct ContribArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 201)]
    pub grid_points: usize,
    /// Highest frequency in cycles/sample.
    #[arg(long, default_value_t = 0.5)]
    pub f_max: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Extended)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub out: CommonOut,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Scenario JSON; defaults to the baseline plus one scenario per noise pair
    /// using the model's covariances.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1000)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: CommonOut,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Replay a single channel (1-based); all channels and their sum otherwise.
    #[arg(long)]
    pub channel: Option<usize>,
    /// First sample (1-based) computed by the recursion; earlier samples are
    /// copied from the input. Defaults to order + 1.
    #[arg(long)]
    pub replay_start: Option<usize>,
    #[command(flatten)]
    pub out: CommonOut,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || match &cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Contrib(args) => commands::contrib(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Replay(args) => commands::replay(args),
    };
    let result = match cli.threads {
        Some(0) => Err(commands::CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(commands::CliError::Usage(format!("cannot start thread pool: {e}"))),
        },
        None => run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
