use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use unrestcast_cli::commands::{cmd_explore, cmd_forecast, cmd_ingest, cmd_report};
use unrestcast_cli::config::{load_settings, Overrides};
use unrestcast_cli::CliError;

#[derive(Parser)]
#[command(
    name = "unrestcast",
    version,
    about = "Weekly pandemic-protest forecasting: ingest data, screen predictors, run rolling forecasts, score them"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated region subset override.
    #[arg(long, global = true, value_delimiter = ',')]
    regions: Option<Vec<String>>,

    /// Comma-separated horizon subset override (weeks ahead, 1..=3).
    #[arg(long, global = true, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,

    /// Also render SVG plots when reporting.
    #[arg(long, global = true)]
    svg: bool,

    /// Round count forecasts to whole events on output.
    #[arg(long = "round-counts", global = true)]
    round_counts: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble per-region weekly datasets from the raw streams.
    Ingest,
    /// Screen every predictor for lagged predictive content over the full period.
    Explore,
    /// Run the rolling retrain-and-forecast experiments.
    Forecast,
    /// Score forecasts against the persistence baseline.
    Report,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".to_string()))?;
    let overrides = Overrides {
        seed: cli.seed,
        regions: cli.regions.clone(),
        horizons: cli.horizons.clone(),
        svg: cli.svg,
        round_counts: cli.round_counts,
    };
    let settings = load_settings(config, &overrides)?;
    match cli.command {
        Command::Ingest => cmd_ingest(&settings),
        Command::Explore => cmd_explore(&settings),
        Command::Forecast => cmd_forecast(&settings),
        Command::Report => cmd_report(&settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
