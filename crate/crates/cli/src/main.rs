//! Command-line front end: load an experiment config, apply flag overrides,
//! and run it.

mod config;
mod run;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;

use config::ExperimentConfig;
use run::{run, RunContext};

/// Q-matrix learning experiments: simulate response data, train penalized
/// models, cross-validate, and evaluate estimates.
#[derive(Parser)]
#[command(name = "qrbm", version, about)]
struct Args {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the cv grid (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let base_dir = args
        .config
        .parent()
        .map(PathBuf::from)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    let out_dir = args
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = RunContext {
        base_dir,
        out_dir,
        threads: args.threads,
    };
    run(&config, &ctx).context("experiment failed")
}
