//! Experiment drivers for the `fadetrack` binary.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
pub mod verify;

pub use args::{Cli, Command, CommonArgs, Format};
pub use error::CliError;

use crate::output::{num, OutputDir};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: u8,
    pub message: String,
}

/// Loads and validates the scenario before touching the output
/// directory, so configuration errors leave no files behind.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let args = cli.command.common();
    let cfg = scenario::load_scenario(args.scenario.as_deref(), &args.overrides)?;
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, &cfg),
        Command::Compare(a) => commands::compare(a, &cfg),
        Command::Sweep(a) => commands::sweep(a, &cfg),
        Command::PowerMap(a) => commands::power_map_cmd(a, &cfg),
        Command::Verify(a) => verify_cmd(a, &cfg),
    }
}

fn verify_cmd(args: &CommonArgs, cfg: &fadetrack_core::sim::ScenarioConfig) -> Result<Outcome, CliError> {
    let report = verify::run_verify(cfg, args.worker_count())?;
    let mut out = OutputDir::create(&args.out, args.format, "verify", cfg)?;
    out.csv(
        "verify.csv",
        &["check", "status", "measured", "tolerance", "detail"],
        report.checks.iter().map(|c| {
            format!("{},{},{},{},\"{}\"", c.name, c.status(), num(c.measured), num(c.tolerance), c.detail.replace('"', "'"))
        }),
    )?;
    out.csv(
        "stability_margin.csv",
        &["step", "ratio", "below_threshold"],
        report.stability_rows.iter().map(|(k, r, p)| {
            format!("{k},{},{}", output::opt_num(*r), p.map_or(String::new(), |b| u8::from(b).to_string()))
        }),
    )?;
    out.json("verify.json", report.body.clone())?;
    let lines: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{:<6} {:<38} {} (limit {}) {}", c.status(), c.name, num(c.measured), num(c.tolerance), c.detail))
        .collect();
    let failed = report.failed();
    let text = lines.join("\n");
    if failed.is_empty() {
        Ok(Outcome { exit_code: 0, message: text })
    } else {
        Ok(Outcome {
            exit_code: 4,
            message: format!("{text}\n{} verification check(s) failed", failed.len()),
        })
    }
}
