//! Command-line configuration, experiment dispatch and table output.

mod config;
mod run;
mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{
    parse_config_text, read_config_file, Command, GridSpec, OutputFormat, RunConfig, Settings, StepChoice,
};
pub use run::{execute, run, VERSION};
pub use table::{format_value, grid_hash, parse_csv, write_tables, OutputTable, SIGNIFICANT_DIGITS};

use crate::error::{Error, Result};

/// Worker-count override for the parallel scans.
pub const WORKERS_ENV: &str = "LMG_QSL_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "lmg-qsl", version, about = "Speed limits of a qubit coupled to an LMG environment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommandArgs {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Even-block levels and their curvature along an alpha grid.
    Spectrum(CommandArgs),
    /// Quantum histogram against the classical density of states.
    Dos(CommandArgs),
    /// Strength function and decoherence series for one coupling.
    Quench(CommandArgs),
    /// Speed-limit time along a coupling grid.
    QslScan(CommandArgs),
    /// Finite-size scaling at the critical coupling.
    Scaling(CommandArgs),
    /// Numeric against analytic critical coupling along an alpha grid.
    CriticalLocus(CommandArgs),
    /// Speed-limit time on an evolution-time by coupling grid.
    Heatmap(CommandArgs),
    /// Non-Markovianity along a coupling grid.
    NmScan(CommandArgs),
}

impl CliCommand {
    fn split(&self) -> (Command, &CommandArgs) {
        match self {
            CliCommand::Spectrum(a) => (Command::Spectrum, a),
            CliCommand::Dos(a) => (Command::Dos, a),
            CliCommand::Quench(a) => (Command::Quench, a),
            CliCommand::QslScan(a) => (Command::QslScan, a),
            CliCommand::Scaling(a) => (Command::Scaling, a),
            CliCommand::CriticalLocus(a) => (Command::CriticalLocus, a),
            CliCommand::Heatmap(a) => (Command::Heatmap, a),
            CliCommand::NmScan(a) => (Command::NmScan, a),
        }
    }
}

/// Merges the optional config file under the parsed flags and validates.
pub fn parse_config(cli: &Cli) -> Result<RunConfig> {
    let (command, args) = cli.command.split();
    let base = match &args.config {
        Some(path) => read_config_file(path)?,
        None => Settings::default(),
    };
    RunConfig::resolve(command, &base.overlay(&args.settings))
}

/// Reads [`WORKERS_ENV`]; `None` when unset.
pub fn worker_override() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, got `{text}`"))),
        },
    }
}
