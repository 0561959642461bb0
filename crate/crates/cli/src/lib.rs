//! Command-line front end for the satake toolkit: argument parsing, flat
//! configuration files, output writing and exit-status policy.

pub mod commands;
pub mod settings;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Outcome;
use settings::{Setting, Settings, UsageError, COMMON};

/// Exit statuses.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const NUMERIC: u8 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "satake", version, about = "Vertical Sato-Tate, n-level density and paramodular experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Command-specific tolerance.
    #[arg(long, global = true)]
    pub tol: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density of mu_p on a grid (CSV) with its normalization record (JSON).
    Density {
        #[arg(long)]
        primes: Option<String>,
        #[arg(long)]
        grid: Option<String>,
    },
    /// Quadrature moments of lambda~(p^n) against their main terms.
    Moments {
        #[arg(long)]
        primes: Option<String>,
        #[arg(long)]
        n_max: Option<String>,
    },
    /// Random matrix ensembles against kernel predictions.
    Rmt {
        #[arg(long)]
        groups: Option<String>,
        #[arg(long)]
        size: Option<String>,
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        include_zero: Option<String>,
        #[arg(long)]
        z_threshold: Option<String>,
        #[arg(long)]
        dump: Option<String>,
    },
    /// Synthetic families: coefficient averages, joint moments, +- split.
    Family {
        #[arg(long)]
        primes: Option<String>,
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long)]
        joint_primes: Option<String>,
        #[arg(long)]
        degree: Option<String>,
        #[arg(long)]
        z_threshold: Option<String>,
        #[arg(long)]
        dump: Option<String>,
    },
    /// Paramodular dimension main terms (CSV).
    Dims {
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        levels: Option<String>,
    },
    /// Kernel prediction for Fejer test functions.
    Predict {
        #[arg(long)]
        symmetry: Option<String>,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        method: Option<String>,
    },
}

type Runner = fn(&Settings) -> anyhow::Result<Outcome>;
type Overrides = Vec<(&'static str, Option<String>)>;

impl Command {
    fn plan(self) -> (&'static [Setting], Overrides, Runner) {
        use commands::*;
        match self {
            Command::Density { primes, grid } => (
                density::SETTINGS,
                vec![("primes", primes), ("grid", grid)],
                density::run,
            ),
            Command::Moments { primes, n_max } => (
                moments::SETTINGS,
                vec![("primes", primes), ("n_max", n_max)],
                moments::run,
            ),
            Command::Rmt { groups, size, samples, levels, beta, include_zero, z_threshold, dump } => (
                rmt::SETTINGS,
                vec![
                    ("groups", groups),
                    ("size", size),
                    ("samples", samples),
                    ("levels", levels),
                    ("beta", beta),
                    ("include_zero", include_zero),
                    ("z_threshold", z_threshold),
                    ("dump", dump),
                ],
                rmt::run,
            ),
            Command::Family { primes, samples, m, rule, joint_primes, degree, z_threshold, dump } => (
                family::SETTINGS,
                vec![
                    ("primes", primes),
                    ("samples", samples),
                    ("m", m),
                    ("rule", rule),
                    ("joint_primes", joint_primes),
                    ("degree", degree),
                    ("z_threshold", z_threshold),
                    ("dump", dump),
                ],
                family::run,
            ),
            Command::Dims { weights, levels } => (
                dims::SETTINGS,
                vec![("weights", weights), ("levels", levels)],
                dims::run,
            ),
            Command::Predict { symmetry, n, beta, method } => (
                predict::SETTINGS,
                vec![("symmetry", symmetry), ("n", n), ("beta", beta), ("method", method)],
                predict::run,
            ),
        }
    }
}

/// Status for a failed run: bad flags, settings or parameters give 2;
/// numerical failures and I/O give 3.
pub fn error_status(err: &anyhow::Error) -> u8 {
    use satake_core::Error as E;
    let invalid_parameter = |e: &E| {
        matches!(
            e,
            E::NotPrime(_) | E::OutOfRange { .. } | E::WeightRange { .. } | E::SupportViolation { .. } | E::MissingPrime(_)
        )
    };
    let usage = err.chain().any(|e| {
        e.is::<UsageError>() || e.downcast_ref::<E>().is_some_and(invalid_parameter)
    });
    if usage {
        exit::USAGE
    } else {
        exit::NUMERIC
    }
}

/// Parses, resolves settings and runs one command.
pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let (keys, mut overrides, runner) = cli.command.plan();
    let common = cli.common;
    overrides.push(("seed", common.seed));
    overrides.push(("out", common.out));
    if keys.iter().any(|(k, _, _)| *k == "tol") {
        overrides.push(("tol", common.tol));
    } else if common.tol.is_some() {
        return Err(UsageError("--tol does not apply to this command".into()).into());
    }
    let settings = Settings::resolve(&[COMMON, keys], common.config.as_deref(), &overrides)?;
    runner(&settings)
}

/// Entry point shared by the binary and in-process tests.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::PASS });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.pass {
                ExitCode::from(exit::PASS)
            } else {
                eprintln!("checks failed");
                ExitCode::from(exit::CHECK_FAILED)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(error_status(&err))
        }
    }
}
