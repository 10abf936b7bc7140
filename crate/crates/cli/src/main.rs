//! `dcaa`: experiment harness for the cylinder directly-connected antenna
//! array link-level simulator.

mod commands;
mod config;
mod output;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::time::Instant;

use config::ExperimentConfig;
use output::{sha256_hex, write_manifest};

#[derive(Parser)]
#[command(
    name = "dcaa",
    version,
    about = "Cylinder DCAA link-level simulator: pattern export, sum-rate sweeps, convergence traces and cost reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export per-sub-array pattern cuts, the all-port envelope and the
    /// array roster.
    Pattern(CommonArgs),
    /// Monte-Carlo sum-rate sweep over the SNR grid for the selected
    /// architectures and directions.
    Sweep(CommonArgs),
    /// Per-iteration downlink convergence trace at the first SNR point.
    Converge(CommonArgs),
    /// Hardware-cost report for the configured scenario and prices.
    Cost(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (name, args, runner): (_, _, fn(&ExperimentConfig, &std::path::Path, u64) -> Result<output::RunManifest>) =
        match &cli.command {
            Command::Pattern(a) => ("pattern", a, commands::run_pattern),
            Command::Sweep(a) => ("sweep", a, commands::run_sweep),
            Command::Converge(a) => ("converge", a, commands::run_converge),
            Command::Cost(a) => ("cost", a, commands::run_cost),
        };

    let raw = std::fs::read(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let config = ExperimentConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(config.seed);
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;

    let started = Instant::now();
    let mut manifest = runner(&config, &args.out, seed)?;
    manifest.wall_time_ms = started.elapsed().as_millis();
    manifest.config_sha256 = sha256_hex(&raw);
    let manifest_path = write_manifest(&manifest, &args.out)?;

    println!(
        "{name}: wrote {} file(s) and {} to {}",
        manifest.outputs.len(),
        manifest_path.file_name().unwrap().to_string_lossy(),
        args.out.display()
    );
    Ok(())
}
