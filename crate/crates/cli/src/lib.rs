//! Command-line front end for the budgeted bandit experiments: reads a JSON
//! configuration, runs the plan and writes CSV tables.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use config::{CliConfig, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("bounds undefined: {0}")]
    ZeroGap(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::ZeroGap(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bucb", version, about = "Budgeted bandit experiment runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every policy over the budget grid and write the result tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long, env = "BUCB_OUT")]
        out: Option<PathBuf>,
        /// Base seed (overrides `base_seed`).
        #[arg(long, env = "BUCB_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Print and write the analytic bounds for the configured arm set.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "BUCB_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "BUCB_SEED")]
        seed: Option<u64>,
    },
}

fn load(path: &Path, overrides: Overrides) -> Result<CliConfig, CliError> {
    let mut config = CliConfig::load(path)?;
    config.apply(&overrides);
    Ok(config)
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            replications,
        } => {
            let config = load(
                &config,
                Overrides {
                    seed,
                    out,
                    replications,
                },
            )?;
            commands::cmd_run(&config).map(|_| ())
        }
        Command::Bounds { config, out, seed } => {
            let config = load(
                &config,
                Overrides {
                    seed,
                    out,
                    replications: None,
                },
            )?;
            commands::cmd_bounds(&config).map(|_| ())
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
