//! Command-line pipeline: `generate`, `ingest`, `dmv`, `train`, `build-vf`
//! and `simulate`, driven by one TOML or JSON config file.
//!
//! Every command writes into a run directory (`--run-dir`, or
//! `<output_dir>/<timestamp>-<config hash>`), reads its inputs from there
//! unless the config names them, and leaves a `manifest_<command>.json`
//! with the config hash, seed and SHA-256 of every input and output.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Context;
pub use config::RunConfig;

use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "aircargo",
    version,
    about = "Air cargo capacity control pipeline"
)]
pub struct Cli {
    /// TOML or JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the root seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Writes into this directory instead of a fresh timestamped one.
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    /// Parent directory for timestamped runs.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic booking history and a held-out set.
    Generate,
    /// Validate and normalise a booking CSV.
    Ingest {
        /// Input CSV; overrides `paths.input_csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score frequent booked volumes and write the DMV directory.
    Dmv,
    /// Train the received-volume model and cross-validate it by flight.
    Train,
    /// Tabulate value functions for each capacity.
    BuildVf,
    /// Run a simulation campaign over the tabulated capacities.
    Simulate,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::StateSpaceTooLarge { .. } => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn load_config(cli: &Cli) -> crate::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(dir) = &cli.run_dir {
        config.run_dir = Some(dir.clone());
    }
    Ok(config)
}

fn execute(cli: Cli) -> crate::Result<()> {
    let ctx = Context::new(load_config(&cli)?)?;
    match cli.command {
        Command::Generate => commands::cmd_generate(&ctx),
        Command::Ingest { input } => commands::cmd_ingest(&ctx, input),
        Command::Dmv => commands::cmd_dmv(&ctx),
        Command::Train => commands::cmd_train(&ctx),
        Command::BuildVf => commands::cmd_build_vf(&ctx),
        Command::Simulate => commands::cmd_simulate(&ctx),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
