//! `eprtel`: run wavepacket-teleportation experiments from JSON configs and
//! emit CSV/JSON tables.
//!
//! Exit codes: 0 success, 1 error, 2 success with design warnings.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use commands::Status;

#[derive(Debug, Parser)]
#[command(
    name = "eprtel",
    version,
    about = "Monte Carlo simulator of atomic-wavepacket teleportation via dissociation pairs and Coulomb collisions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print every derived quantity (temperature, squeezing, collision range,
    /// resolutions, error budget, fidelity bound) for a config
    Params(CommonArgs),
    /// Quantum trajectory ensemble (Gaussian input)
    Teleport(RunArgs),
    /// Classical measure-and-reprepare baseline ensemble
    Classical(RunArgs),
    /// Two-peak input through the noise-convolution pathway
    Cat(RunArgs),
    /// Sample the pair source alone: collective vs single-particle spreads
    EprDemo(RunArgs),
    /// Error budget (and optional Monte Carlo fidelity) across a parameter grid
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Comma-separated tables, 17 significant digits
    Csv,
    /// The same payloads as JSON documents
    Json,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config file; omit to start from an empty config and --set keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key before validation (dotted path), repeatable:
    /// --set v_y_mps=500 --set noise.x_shift_m=1e-9
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Table format for emitted files (params: stdout format)
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config event count
    #[arg(long)]
    events: Option<u64>,
    /// Override the config worker count
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory for summary.json and tables
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Config key to sweep: D_m, dd_m, dd_v_m or v_y_mps
    #[arg(long)]
    param: String,
    /// Comma-separated parameter values (SI units)
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Also run the Monte Carlo ensemble at every value
    #[arg(long)]
    mc: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Params(args) => commands::cmd_params(args),
        Command::Teleport(args) => commands::cmd_teleport(args),
        Command::Classical(args) => commands::cmd_classical(args),
        Command::Cat(args) => commands::cmd_cat(args),
        Command::EprDemo(args) => commands::cmd_epr_demo(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
    };
    match result {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Warned) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
