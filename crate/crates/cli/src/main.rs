//! `gradquad` command-line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Numerical(#[from] gradquad::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 64,
            CliError::Io(_) => 74,
            CliError::Numerical(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gradquad", version, about = "Minimal branches and diagnostics for -Δu - b|∇u|² = λg(u)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override `grid.M`.
    #[arg(long = "grid-m", global = true)]
    grid_m: Option<usize>,
}

#[derive(Clone, Copy, Debug, Subcommand)]
enum Command {
    /// Minimal solution at `problem.lambda`.
    Solve,
    /// Branch dataset with a bracket for λ*.
    Branch,
    /// Dimension thresholds table.
    Thresholds,
    /// Principal eigenvalue certificate at `problem.lambda`.
    Stability,
    /// Compare the u-equation with its exponential-transform image.
    CheckTransform,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GRADQUAD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("GRADQUAD_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("GRADQUAD_THREADS: {e}")))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None if matches!(cli.command, Command::Thresholds) => config::RunConfig::default(),
        None => return Err(CliError::Config("--config is required for this command".into())),
    };
    if let Some(m) = cli.grid_m {
        match cfg.grid.as_mut() {
            Some(g) => g.m = m,
            None => return Err(CliError::Config("at `grid`: --grid-m given but the config has no grid".into())),
        }
    }
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Solve => commands::solve(&cfg, &cli.out),
        Command::Branch => commands::branch(&cfg, &cli.out),
        Command::Thresholds => commands::thresholds(&cfg, &cli.out),
        Command::Stability => commands::stability(&cfg, &cli.out),
        Command::CheckTransform => commands::check_transform(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("gradquad: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
