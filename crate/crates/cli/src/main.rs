mod commands;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spherear::{Error, Projection, Variant};

use crate::data::InputFormat;

/// Spherical autoregression for compositional and distributional time series.
#[derive(Debug, Parser)]
#[command(name = "spherear", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a SAR or DSAR model and write model.json and diagnostics.json
    Fit(FitArgs),
    /// One-step prediction from a model file, written to prediction.json
    Predict(PredictArgs),
    /// Simulate a compositional or density series from known coefficients
    Simulate(SimulateArgs),
    /// Monte Carlo check of the autocovariance CLT, or data validation with plot output
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, value_enum, default_value = "composition")]
    format: InputFormat,
    /// Density grid as "AX:min:max:cells[,AX2:min:max:cells]"
    #[arg(long)]
    grid: Option<String>,
    /// Multiplier on the (max - min)/5 smoothing bandwidth
    #[arg(long, default_value_t = 1.0)]
    bandwidth_scale: f64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "sar")]
    variant: Variant,
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Projection used for in-sample and held-out predictions
    #[arg(long, default_value = "proj2")]
    projection: Projection,
    /// Number of trailing observations to hold out; the first is predicted
    #[arg(long, default_value_t = 0)]
    holdout: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "proj2")]
    projection: Projection,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value = "sar")]
    variant: Variant,
    /// Comma-separated coefficients, e.g. "0.4,-0.3"
    #[arg(long, allow_hyphen_values = true)]
    alphas: String,
    /// Number of output time points
    #[arg(long, default_value_t = 100)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of the innovation coefficients
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Active basis size of the innovations (default: parts for compositions, 4 for densities)
    #[arg(long)]
    k: Option<usize>,
    /// Mean operator: this multiple of the first plane atom of the innovation frame
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    drift: f64,
    /// composition or density
    #[arg(long, value_enum, default_value = "composition")]
    format: InputFormat,
    /// Number of parts of simulated compositions
    #[arg(long, default_value_t = 3)]
    parts: usize,
    /// Grid of simulated densities
    #[arg(long, default_value = "x:-3:3:40,y:-3:3:40")]
    grid: String,
    /// Simulate even if the coefficients are not stationary
    #[arg(long)]
    force: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Validate this data file and emit plot data instead of running the Monte Carlo check
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    alphas: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.3)]
    sigma: f64,
    #[arg(long, default_value_t = 2000)]
    length: usize,
    #[arg(long, default_value_t = 500)]
    replicates: usize,
    /// Largest autocovariance lag and Yule-Walker order
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Maps library errors onto the documented exit codes.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::DegenerateAutocovariance(_)
        | Error::NoConvergence { .. }
        | Error::AntipodalPair { .. }
        | Error::AntipodalToMean { .. }
        | Error::ProjectionDegenerate
        | Error::TruncationNotConverged { .. } => 3,
        Error::FormatVersion { .. } => 4,
        Error::NonStationary { .. } => 5,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Predict(args) => commands::predict(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Validate(args) => commands::validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
