use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use squint_core::pipeline::Estimator;

mod commands;
mod manifest;

#[derive(Debug, Parser)]
#[command(
    name = "squint",
    version,
    about = "Wideband THz sensing with controllable beam squint"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scene or experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Noise seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// SNR in dB; overrides the config.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Run without noise regardless of the config.
    #[arg(long, global = true, conflicts_with = "snr_db")]
    pub no_noise: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub estimator: Option<Estimator>,
    /// Sidelobe half-window.
    #[arg(long, global = true)]
    pub msidelobe: Option<usize>,
    /// Coarse range grid step in meters.
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize echo spectra for every group and sweep.
    Simulate,
    /// Estimate target angles and ranges.
    Locate {
        /// Read spectra written by `simulate` instead of synthesizing them.
        #[arg(long)]
        spectra: Option<PathBuf>,
        /// Also write the coarse range score of every target and group.
        #[arg(long)]
        curves: bool,
    },
    /// Write phase-shifter settings, delays and the squint angle map.
    DesignExport,
    /// Conventional narrowband beam sweep over the baseline angle grid.
    BaselineSweep,
    /// Monte Carlo RMSE over SNR, optionally along one parameter axis.
    RmseSweep,
    /// Per-group principal ranges and how they combine.
    Resolve {
        #[arg(long)]
        spectra: Option<PathBuf>,
        /// Tile each group's score over the whole sensing range and report
        /// the peaks shared by every group.
        #[arg(long)]
        full_curve: bool,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SQUINT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("SQUINT_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| commands::run(&cli.common, &cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
