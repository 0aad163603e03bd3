//! Batch CLI: bound reports, verification suites, parameter sweeps,
//! simulations, and noise design. One command per process; outputs are
//! plain JSON/CSV files written atomically.

// `!(x > y)` guards intentionally reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};
use output::Units;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("{0}")]
    Core(String),

    #[error("verification failed: {0} case(s)")]
    VerifyFailed(usize),
}

impl From<maxleak::Error> for CliError {
    fn from(err: maxleak::Error) -> Self {
        match &err {
            maxleak::Error::NoClosedForm { .. } => CliError::Core(format!(
                "{err}; rerun with `--fallback numeric` to use the general bound with a numerical h"
            )),
            _ => CliError::Core(err.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "maxleak",
    version,
    about = "Maximal-leakage bounds for noisy iterative training: reports, verification, sweeps, simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fallback {
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LossPreset {
    #[value(name = "zero-one")]
    ZeroOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    D,
    Sigma,
    Eta,
    P,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the leakage bound and generalization report for a config.
    Bound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "nats")]
        units: Units,
        /// Fall back to the general bound with a numerical h when no closed
        /// form covers the (p, family) pair.
        #[arg(long, value_enum)]
        fallback: Option<Fallback>,
        /// Oracle budget (grid nodes or Monte Carlo samples) for fallbacks.
        #[arg(long, default_value_t = 400_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the config's loss model with a preset.
        #[arg(long, value_enum)]
        loss: Option<LossPreset>,
    },
    /// Run oracle-equivalence / dominance / noise-design suites.
    Verify {
        /// One of: h-closed, dominance, optimal-noise, all.
        #[arg(default_value = "all")]
        suite: String,
        /// Dimension range for h-closed, e.g. "1..3".
        #[arg(long, default_value = "1..3")]
        d: String,
        /// Dimension for the dominance suite (1 or 2).
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Random shift sets per dominance configuration.
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, default_value_t = 300_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sweep one axis and emit plot-ready CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// "lo:hi:steps" (ignored for the p axis, which is {1,2,inf}).
        #[arg(long)]
        range: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        fallback: Option<Fallback>,
        #[arg(long, default_value_t = 400_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the training-tail experiment and compare against the bound.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override [simulation].trials.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Variance-optimal noise and the family ranking at that budget.
    OptimizeNoise {
        /// Per-coordinate variance budget.
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Parse args and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version are successful exits; anything else is usage.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bound {
            config,
            out_dir,
            units,
            fallback,
            budget,
            seed,
            loss,
        } => commands::bound::run(&config, &out_dir, units, fallback, budget, seed, loss),
        Command::Verify {
            suite,
            d,
            dim,
            grid,
            budget,
            seed,
            out_dir,
        } => commands::verify::run(&suite, &d, dim, grid, budget, seed, &out_dir),
        Command::Sweep {
            config,
            axis,
            range,
            out_dir,
            fallback,
            budget,
            seed,
        } => commands::sweep::run(
            &config,
            axis,
            range.as_deref(),
            &out_dir,
            fallback,
            budget,
            seed,
        ),
        Command::Simulate {
            config,
            trials,
            seed,
            out_dir,
        } => commands::simulate::run(&config, trials, seed, &out_dir),
        Command::OptimizeNoise {
            budget,
            d,
            eta,
            l,
            out_dir,
        } => commands::optimize_noise::run(budget, d, eta, l, &out_dir),
    }
}
