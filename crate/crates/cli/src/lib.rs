//! Experiment harness: configuration, subcommands, CSV and SVG output.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;
pub mod table;

use std::path::PathBuf;

use commands::Context;
use config::{ExperimentConfig, Subcommand};
use error::{CliError, CliResult};

/// Name of the environment variable that caps agent worker threads.
pub const THREADS_ENV: &str = "ALMAB_THREADS";

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub max_workers: Option<usize>,
}

/// Parses an `ALMAB_THREADS` value.
pub fn parse_thread_cap(value: &str) -> CliResult<usize> {
    match value.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}"))),
    }
}

pub fn resolve(command: Subcommand, options: &Options) -> CliResult<Context> {
    let mut config = match &options.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_for(command),
    };
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    if let Some(r) = options.replicates {
        config.replicates = r;
    }
    if let Some(out) = &options.out {
        config.output_dir = out.clone();
    }
    config.validate(command)?;
    Ok(Context { out_dir: config.output_dir.clone(), config, max_workers: options.max_workers })
}

/// Runs `command` and returns the files it wrote.
pub fn execute(command: Subcommand, options: &Options) -> CliResult<Vec<PathBuf>> {
    let ctx = resolve(command, options)?;
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| CliError::io(&ctx.out_dir, e))?;
    match command {
        Subcommand::Simulate => commands::simulate::run(&ctx),
        Subcommand::Compare => commands::compare::run(&ctx),
        Subcommand::Airfoil => commands::airfoil::run(&ctx),
        Subcommand::Scaling => commands::scaling::run(&ctx),
        Subcommand::Analyze => commands::analyze::run(&ctx),
    }
}
