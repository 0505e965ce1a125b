use std::path::PathBuf;
use std::process::ExitCode;

use almab_cli::config::Subcommand;
use almab_cli::{execute, parse_thread_cap, Options, THREADS_ENV};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Replicated bandit runs with run-history CSVs and charts
    Simulate,
    /// Sequential vs distributed comparison
    Compare,
    /// Surrogate-guided drag minimization
    Airfoil,
    /// Agent-count scaling sweep
    Scaling,
    /// Bootstrap intervals and paired tests over run histories
    Analyze,
}

#[derive(Debug, Parser)]
#[command(name = "almab", version, about = "Bandit-driven active learning with distributed agents")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config; built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate count (overrides the config)
    #[arg(long)]
    replicates: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Command::Simulate => Subcommand::Simulate,
        Command::Compare => Subcommand::Compare,
        Command::Airfoil => Subcommand::Airfoil,
        Command::Scaling => Subcommand::Scaling,
        Command::Analyze => Subcommand::Analyze,
    };
    let max_workers = match std::env::var(THREADS_ENV) {
        Ok(v) => match parse_thread_cap(&v) {
            Ok(n) => Some(n),
            Err(e) => {
                eprintln!("almab: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        Err(_) => None,
    };
    let options = Options { config: args.config, out: args.out, seed: args.seed, replicates: args.replicates, max_workers };
    match execute(command, &options) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("almab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
