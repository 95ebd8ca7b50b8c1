use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fadetrack", version, about = "Distributed sigma-point tracking over fading, lossy links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo run of the first configured variant: RMSE series,
    /// mean trajectory, per-run telemetry and a summary.
    Simulate(CommonArgs),
    /// Run every level in the scenario's `sweep` list and report change
    /// rates against the highest level.
    Sweep(CommonArgs),
    /// Run all configured variants on shared realizations.
    Compare(CommonArgs),
    /// Numerical property checks plus bound and stability diagnostics.
    Verify(CommonArgs),
    /// Transmit power to bit error rate and packet success probability.
    PowerMap(CommonArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a) | Command::Sweep(a) | Command::Compare(a) | Command::Verify(a) | Command::PowerMap(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Compare(_) => "compare",
            Command::Verify(_) => "verify",
            Command::PowerMap(_) => "power-map",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario JSON file; the built-in reference scenario when omitted.
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Set a dotted scenario path, e.g. `link.q=0.3` or `sensors.fading_scale=[0.5]`.
    /// Values are parsed as JSON, falling back to a string. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the available parallelism. Results do
    /// not depend on it.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

impl CommonArgs {
    pub fn worker_count(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}
