//! `hrom`: full-order runs, POD bases, reduced models and their comparison.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::artifacts::RunDir;
use crate::commands::Context;
use crate::config::{ExperimentConfig, RomPath};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "hrom", version, about = "Structure-preserving reduced-order models for KdV-type PDEs")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the randomized SVD; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory for artifacts.
    #[arg(long, global = true, env = "HROM_OUT", default_value = "runs")]
    out: PathBuf,
    /// Threads for the offline phases and the eoc ladder; online phases run on one.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Which reduced right-hand side to run; overrides the configuration.
    #[arg(long, global = true, value_enum)]
    path: Option<RomPath>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the full-order model and store its trajectory.
    Fom,
    /// Build the POD basis from the stored trajectory.
    Basis,
    /// Reduce, then integrate the reduced model.
    Rom,
    /// Errors of the reduced solution against the full-order one.
    Compare,
    /// Convergence orders against the exact two-soliton solution.
    Eoc,
    /// Timings of every phase and the resulting speed-ups.
    Bench,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    let threads = cli.threads.max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let run = RunDir::create(cli.out, config.hash())?;
    let ctx = Context {
        path: cli.path.unwrap_or(config.rom.path),
        config,
        run,
        threads,
    };
    match cli.command {
        Command::Fom => commands::fom(&ctx),
        Command::Basis => commands::basis(&ctx),
        Command::Rom => commands::rom(&ctx),
        Command::Compare => commands::compare(&ctx),
        Command::Eoc => commands::eoc_ladder(&ctx),
        Command::Bench => commands::bench(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hrom: {e}");
            e.exit_code()
        }
    }
}
