//! Command-line experiment runner.
//!
//! Settings come from built-in per-experiment defaults, then an optional flat
//! TOML file (`--config`), then command-line flags. Keys in the file use the
//! flag names without the leading dashes.

mod config;
mod experiments;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{
    monitor_bounds, ExperimentConfig, ExperimentKind, ModelKind, ScheduleSpec, Settings, Switch, DEFAULT_DATASET, LINREG_ALPHA0,
    LINREG_SIGMA, SURROGATE_SAMPLES,
};
pub use experiments::{
    agent_w2_series, gaussian_potential, linreg_potential, linreg_true_weights, logistic_data, mixture_potential,
    monitor_reports, run_experiment, run_generic, run_linreg, run_logistic, run_mixture, test_auc, DataSource,
    RunOutput, GRADIENT_WINDOW, SURROGATE_DENSITY,
};
pub use table::Table;

use crate::Result;

#[derive(Debug, Parser)]
#[command(name = "pushsum-langevin", version, about = "Decentralized Langevin sampling over directed graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommandArgs {
    /// Flat TOML file with settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bayesian linear regression on synthetic data.
    Linreg(CommandArgs),
    /// Posterior over the means of a two-component Gaussian mixture.
    Mixture(CommandArgs),
    /// Bayesian logistic regression on a libsvm dataset.
    Logistic(CommandArgs),
    /// Any registered model with the generic trace output.
    Run(CommandArgs),
}

impl Command {
    fn parts(&self) -> (ExperimentKind, &CommandArgs) {
        match self {
            Command::Linreg(a) => (ExperimentKind::Linreg, a),
            Command::Mixture(a) => (ExperimentKind::Mixture, a),
            Command::Logistic(a) => (ExperimentKind::Logistic, a),
            Command::Run(a) => (ExperimentKind::Custom, a),
        }
    }
}

/// Resolves the configuration for a parsed command line.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let (kind, args) = cli.command.parts();
    let base = match &args.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    ExperimentConfig::resolve(kind, &base.overlay(&args.settings))
}

/// Runs the command and writes its CSV to `--out` or stdout.
pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let output = run_experiment(&cfg)?;
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            output.table.write_to(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            output.table.write_to(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
