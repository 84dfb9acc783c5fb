//! `tricond`: bounds, G-closure and optimal laminates for three-phase conducting composites.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tricond::Error;

use config::{Flags, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Lib(e) => match e {
                Error::InvalidSpec(_)
                | Error::InvalidLoading(_)
                | Error::Domain { .. }
                | Error::RegimeMismatch { .. }
                | Error::Parse(_) => 2,
                Error::AmbiguousRegion { .. } => 3,
                Error::OutOfApplicability { .. }
                | Error::IncompatibleLoading { .. }
                | Error::InfiniteEnergy
                | Error::InfeasibleTopology(_) => 4,
                Error::EmptyRegion => 5,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "tricond", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Bound, region and G-closure point at one (spec, r).
    Bound,
    /// Region classification over an (m1, r) grid.
    RegionMap,
    /// G-closure boundary over an r grid, with comparison bounds.
    Gclosure,
    /// Optimal laminate and its field report at one (spec, r).
    Structure {
        /// Build this region's construction instead of the classified one.
        #[arg(long)]
        region: Option<String>,
    },
    /// Region-E gap between the best L(13,2,1) and the bound.
    GapSweep,
    /// Invariant suite; exits 1 on any failure.
    Verify,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = RunConfig::resolve(&cli.flags)?;
    let (text, ok) = tricond::exec::with_jobs(cfg.jobs, || -> Result<(String, bool), CliError> {
        Ok(match &cli.command {
            Command::Bound => (commands::bound(&cfg)?, true),
            Command::RegionMap => (commands::region_map(&cfg)?, true),
            Command::Gclosure => (commands::gclosure(&cfg)?, true),
            Command::Structure { region } => (commands::structure(&cfg, region.as_deref())?, true),
            Command::GapSweep => (commands::gap_sweep(&cfg)?, true),
            Command::Verify => commands::verify(&cfg)?,
        })
    })?;
    output::emit(cfg.out.as_deref(), &text)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("tricond: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
