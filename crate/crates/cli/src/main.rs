mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Rotor analysis, MTPA tables and drive-cycle topology optimization for one
/// pole of a permanent-magnet synchronous machine.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; all defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the operating-point solves.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Overrides `optimizer.max_iterations`.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Recorded in the manifest; the pipeline itself is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Drive-cycle efficiency, temperature and stress of the initial design.
    Analyze,
    /// MTPA table of the initial design.
    Mtpa,
    /// Level-set optimization over the drive cycle.
    Optimize,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Mtpa => "mtpa",
            Command::Optimize => "optimize",
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => match config::parse_config(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => config::RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(n) = cli.max_iters {
        cfg.optimizer.max_iterations = n;
    }
    if cli.workers == 0 {
        eprintln!("error: --workers must be positive");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let ctx = run::Context {
        command: cli.command.name(),
        config: &cfg,
        seed: cli.seed,
        workers: cli.workers,
    };
    match run::run(&ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
