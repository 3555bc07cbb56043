//! `bmstab`: distance bounds, John positions, moduli of convexity and
//! stability validation from the command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 input or config error,
//! 3 solver failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, RunConfig, Settings};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<bmstab::Error> for CliError {
    fn from(e: bmstab::Error) -> Self {
        use bmstab::Error as E;
        match e {
            E::Parse(_)
            | E::DimensionMismatch { .. }
            | E::OriginNotInterior
            | E::DegenerateBody(_)
            | E::UnboundedBody
            | E::DomainError(_)
            | E::Unsupported(_)
            | E::NotApplicable(_) => CliError::Input(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bmstab", version, about = "Banach–Mazur distance and simplex stability toolkit")]
struct Cli {
    /// TOML file with the same keys as the flags (snake_case); flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Grünbaum and Banach–Mazur upper bounds with witnesses: --input K.json L.json.
    Distance,
    /// John position and decomposition certificate: --input K.json L.json.
    John,
    /// Modulus-of-convexity curve on the t-grid: --input BODY.json.
    Modulus,
    /// Stability-bound validation on (K, L) file pairs or generated jittered simplices.
    Stability,
    /// The acceptance suite with per-criterion timing.
    Selftest,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let command = match cli.command {
        Sub::Distance => Command::Distance,
        Sub::John => Command::John,
        Sub::Modulus => Command::Modulus,
        Sub::Stability => Command::Stability,
        Sub::Selftest => Command::Selftest,
    };
    let file = match &cli.config {
        Some(path) => Settings::from_toml_file(path)?,
        None => Settings::default(),
    };
    let cfg = RunConfig::resolve(command, cli.settings.over(file))?;
    let outcome = match cfg.command {
        Command::Distance => commands::cmd_distance(&cfg)?,
        Command::John => commands::cmd_john(&cfg)?,
        Command::Modulus => commands::cmd_modulus(&cfg)?,
        Command::Stability => commands::cmd_stability(&cfg)?,
        Command::Selftest => commands::cmd_selftest(&cfg)?,
    };
    outcome.output.emit(cfg.format, cfg.out.as_deref())?;
    Ok(outcome.valid)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
