mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ConfigError, Format, Mode, RunConfig};

/// Simulator for drive-phase-selected collective states of two qubits in a
/// cavity.
#[derive(Debug, Parser)]
#[command(name = "subradiance", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults to the reference sample.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated output formats (overrides output.formats).
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    format: Option<Vec<Format>>,
    /// Spectroscopy solver (overrides experiment.mode).
    #[arg(long, global = true, value_name = "MODE")]
    mode: Option<Mode>,
    /// Cavity Fock truncation (overrides device.n_max).
    #[arg(long, global = true, value_name = "INT")]
    n_max: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
enum Command {
    /// Dressed single-excitation states, couplings and Purcell rates.
    Dressed,
    /// Steady-state excited population over drive phase and frequency.
    Spectroscopy,
    /// Free decay of one prepared state and its fitted lifetime.
    Lifetime,
    /// Lifetimes of all four states over a detuning grid.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Dressed => "dressed",
            Command::Spectroscopy => "spectroscopy",
            Command::Lifetime => "lifetime",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] subradiance::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) => match e.kind() {
                subradiance::ErrorKind::Precondition => 3,
                subradiance::ErrorKind::Numerical => 4,
            },
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.directory = out.display().to_string();
    }
    if let Some(formats) = &cli.format {
        cfg.output.formats = formats.clone();
    }
    if let Some(mode) = cli.mode {
        cfg.experiment.mode = mode;
    }
    if let Some(n_max) = cli.n_max {
        cfg.device.n_max = n_max;
    }
    cfg.validate()?;
    if let Some(kind) = &cfg.experiment.kind {
        if kind != cli.command.name() {
            return Err(ConfigError::Invalid(format!(
                "experiment.type is {kind:?} but the {} command was run",
                cli.command.name()
            )));
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Dressed => commands::dressed(&cfg),
        Command::Spectroscopy => commands::spectroscopy(&cfg),
        Command::Lifetime => commands::lifetime(&cfg),
        Command::Sweep => commands::sweep(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
