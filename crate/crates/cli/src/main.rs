//! `epac`: staged pipeline from a potential to exact, centroid and
//! effective-potential correlation functions and their spectra.

mod config;
mod error;
mod manifest;
mod self_test;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunConfig, Scale};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "epac", version, about)]
struct Args {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run size preset; explicit config keys take precedence.
    #[arg(long, global = true, value_enum)]
    scale: Option<Scale>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigensystem, exact and canonical correlations, line spectra.
    SolveExact {
        /// Check a harmonic potential against its closed forms.
        #[arg(long)]
        self_test: bool,
    },
    /// Centroid force table by PIMD and the classical effective potential.
    PimdEcp,
    /// Standard effective potential and the effective frequency.
    Legendre,
    /// Centroid molecular dynamics correlation.
    Cmd,
    /// Closed-form EPAC correlation and spectra.
    Epac,
    /// Windowed Fourier transforms and peaks of every available series.
    Spectra,
    /// Joined correlation table and deviation metrics.
    Compare,
    /// All stages in order.
    Run,
    /// Built-in closed-form checks; needs no config.
    SelfTest,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    Ok(RunConfig::load(path)?.with_overrides(args.seed, args.out.clone(), args.scale))
}

fn execute(args: &Args) -> Result<(), CliError> {
    if let Command::SelfTest = args.command {
        return if self_test::run() {
            Ok(())
        } else {
            Err(CliError::Check("self-test failed".into()))
        };
    }
    let cfg = load(args)?;
    match args.command {
        Command::SolveExact { self_test } => stages::solve_exact(&cfg, self_test),
        Command::PimdEcp => stages::pimd_ecp(&cfg),
        Command::Legendre => stages::legendre(&cfg),
        Command::Cmd => stages::cmd(&cfg),
        Command::Epac => stages::epac(&cfg),
        Command::Spectra => stages::spectra(&cfg),
        Command::Compare => stages::compare(&cfg),
        Command::Run => stages::run_all(&cfg),
        Command::SelfTest => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
