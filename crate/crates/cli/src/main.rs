//! `qbm`: runs the propagators and oracle checks from a JSON configuration
//! and writes CSV/JSON results.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or I/O
//! error, 3 numerical-regime error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use config::{parse_override, Config, PropagatorKind};
use output::Out;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] qbm::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                qbm::Error::InvalidParams(_) | qbm::Error::InvalidTime(_) | qbm::Error::DimensionTooSmall { .. } => 2,
                _ => 3,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "qbm", version, about = "Quantum Brownian motion propagators and their oracle checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    propagator: Option<PropagatorKind>,
    /// Use the inner-limit noise weights at the patch time.
    #[arg(long, global = true)]
    inner_lambda: bool,
    #[arg(long, global = true)]
    tol_phys: Option<f64>,
    #[arg(long, global = true)]
    fock_dim: Option<usize>,
    /// Override a configuration value by dotted path, e.g.
    /// `--set params.kt=5` or `--set evolve.times='[0, 1, 2]'`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evolve Gaussian states with one propagator.
    Evolve,
    /// Map the high-temperature and middle-factor conditions over (kT, alpha dt).
    RegionMap,
    /// Run the oracle suite; exits 1 if any check fails.
    Verify,
    /// Entropy growth and uncertainty floors inside the inner layer.
    EntropyCurve,
    /// Search for a state and time at which a propagator breaks positivity.
    ViolationDemo,
    /// Evaluate positivity diagnostics over a grid of parameters.
    Sweep,
}

impl Cli {
    fn overrides(&self) -> Result<Vec<(String, Value)>, CliError> {
        let mut o: Vec<(String, Value)> = self.set.iter().map(|s| parse_override(s)).collect::<Result<_, _>>()?;
        if let Some(s) = self.seed {
            o.push(("seed".into(), s.into()));
        }
        if let Some(k) = self.propagator {
            o.push(("propagator".into(), serde_json::to_value(k).expect("enum serializes")));
        }
        if self.inner_lambda {
            o.push(("inner_lambda".into(), true.into()));
        }
        if let Some(t) = self.tol_phys {
            o.push(("tol_phys".into(), t.into()));
        }
        if let Some(d) = self.fock_dim {
            o.push(("fock_dim".into(), d.into()));
        }
        Ok(o)
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = Config::load(cli.config.as_deref(), &cli.overrides()?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    let out = Out::new(&cli.out)?;
    out.json("config.resolved.json", &cfg)?;
    match cli.command {
        Command::Evolve => commands::evolve(&cfg, &out, &pool),
        Command::RegionMap => commands::region_map(&cfg, &out, &pool),
        Command::Verify => commands::verify(&cfg, &out, &pool),
        Command::EntropyCurve => commands::entropy_curve(&cfg, &out, &pool),
        Command::ViolationDemo => commands::violation_demo(&cfg, &out),
        Command::Sweep => commands::sweep(&cfg, &out, &pool),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qbm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
