//! `heisenberg-ibp`: sample paths, list partitions, and run the Monte Carlo
//! verifications from a TOML configuration.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Overrides;

/// Exit statuses.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const IO: u8 = 3;
    pub const NUMERICAL: u8 = 4;
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Engine(heisenberg_ibp::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        use heisenberg_ibp::Error as E;
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io(_) | CliError::Engine(E::Io(_)) => exit::IO,
            CliError::Engine(E::Numerical(_)) => exit::NUMERICAL,
            CliError::Engine(_) => exit::CONFIG,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl From<heisenberg_ibp::Error> for CliError {
    fn from(e: heisenberg_ibp::Error) -> Self {
        CliError::Engine(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "heisenberg-ibp", version, about = "Monte Carlo checks of quasi-invariance and integration by parts on Heisenberg-like groups")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; the built-in default is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override `mc.samples`.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Override `grid.steps`.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Override `mc.workers`.
    #[arg(long, global = true, env = "HEISENBERG_IBP_WORKERS")]
    workers: Option<usize>,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,
    /// Write JSON reports (the default when no format is given).
    #[arg(long, global = true)]
    json: bool,
    /// Write aggregate CSV tables.
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump noise and group paths as CSV.
    Sample,
    /// Print the partitions in Λ_m, one per line.
    Partitions { m: usize },
    /// Run the verifications of one identity family.
    Verify { kind: VerifyKind },
    /// Re-run the configured identities at steps, 2·steps, 4·steps.
    Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyKind {
    Girsanov,
    PathIbp,
    GroupIbp,
    LeftIbp,
    Inversion,
    Moments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let overrides = Overrides {
        seed: c.seed,
        samples: c.samples,
        steps: c.steps,
        workers: c.workers,
    };
    let formats = run::Formats {
        json: c.json || !c.csv,
        csv: c.csv,
    };
    let result = match &cli.command {
        Command::Partitions { m } => run::partitions(*m),
        cmd => run::Context::new(c.config.as_deref(), &overrides, c.out.clone(), formats).and_then(|ctx| match cmd {
            Command::Sample => ctx.sample(),
            Command::Verify { kind } => ctx.verify(*kind),
            Command::Convergence => ctx.convergence(),
            Command::Partitions { .. } => unreachable!(),
        }),
    };
    match result {
        Ok(true) => ExitCode::from(exit::PASS),
        Ok(false) => ExitCode::from(exit::FAILED),
        Err(e) => {
            eprintln!("heisenberg-ibp: {e}");
            ExitCode::from(e.code())
        }
    }
}
