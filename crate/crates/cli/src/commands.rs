//! Subcommand drivers.

use fadetrack_core::filter::FilterVariant;
use fadetrack_core::sim::{
    covariance_bounds, empirical_bound_check, power_map, run_monte_carlo, run_sweep, BoundConstants, MetricsReport,
    RunResult, ScenarioConfig,
};
use serde_json::{json, Value};

use crate::args::CommonArgs;
use crate::error::CliError;
use crate::output::{num, opt_num, OutputDir};
use crate::Outcome;

/// Steady-state values published for the reference scenario at q = 0.5:
/// (variant, position m, velocity m/s).
pub const REPORTED_Q05: [(FilterVariant, f64, f64); 3] = [
    (FilterVariant::Fc, 12.824, 6.693),
    (FilterVariant::EFc, 7.030, 5.594),
    (FilterVariant::NFc, 387.262, 95.553),
];

fn reported(v: FilterVariant) -> (f64, f64) {
    REPORTED_Q05.iter().find(|r| r.0 == v).map(|r| (r.1, r.2)).expect("all variants listed")
}

fn finish(out: &OutputDir, exceeded: bool, summary: String) -> Outcome {
    let files = out.written().len();
    let dir = out.written().first().and_then(|p| p.parent()).map(|p| p.display().to_string()).unwrap_or_default();
    if exceeded {
        Outcome {
            exit_code: 3,
            message: format!("{summary}\nrun failures exceeded the configured threshold; wrote {files} file(s) to {dir}"),
        }
    } else {
        Outcome {
            exit_code: 0,
            message: format!("{summary}\nwrote {files} file(s) to {dir}"),
        }
    }
}

fn describe(r: &MetricsReport) -> String {
    let s = &r.steady_state;
    format!(
        "{}: steady-state RMSE position {:.3} m (se {:.3}), velocity {:.3} m/s (se {:.3}); {}/{} runs",
        r.variant,
        s.rmse_position_m,
        s.rmse_position_se_m,
        s.rmse_velocity_m_per_s,
        s.rmse_velocity_se_m_per_s,
        r.runs_completed,
        r.runs_requested
    )
}

/// Analytic covariance bounds and how often the simulated covariances
/// respected them. Report-only.
pub fn bounds_block(cfg: &ScenarioConfig, runs: &[RunResult]) -> Value {
    let bc = cfg.bounds.unwrap_or_else(|| BoundConstants::from_scenario(cfg));
    match covariance_bounds(&bc, 6) {
        Ok((lo, hi)) => json!({ "constants": bc, "p_lo": lo, "p_hi": hi, "empirical": empirical_bound_check(runs, lo, hi) }),
        Err(e) => json!({ "constants": bc, "error": e.to_string() }),
    }
}

fn series_rows(columns: &[&[f64]]) -> Vec<String> {
    let len = columns.iter().map(|c| c.len()).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let mut row = (k + 1).to_string();
            for c in columns {
                row.push(',');
                row.push_str(&c.get(k).map_or_else(String::new, |v| num(*v)));
            }
            row
        })
        .collect()
}

fn telemetry_rows(r: &RunResult) -> Vec<String> {
    (0..r.steps())
        .map(|k| {
            let n = r.sq_pos_err[k].len() as f64;
            let emin = r.eig_min[k].iter().copied().fold(f64::INFINITY, f64::min);
            let emax = r.eig_max[k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            [
                (k + 1).to_string(),
                r.tally[k].transmissions.to_string(),
                num(r.tally[k].power_sum_w),
                num(r.energy_j[k]),
                r.links.to_string(),
                r.info_delivered[k].to_string(),
                r.diffusion_delivered[k].to_string(),
                u8::from(r.primitive[k]).to_string(),
                num(emin),
                num(emax),
                num((r.sq_pos_err[k].iter().sum::<f64>() / n).sqrt()),
                num((r.sq_vel_err[k].iter().sum::<f64>() / n).sqrt()),
            ]
            .join(",")
        })
        .collect()
}

const TELEMETRY_COLUMNS: [&str; 12] = [
    "step",
    "transmissions",
    "power_sum_w",
    "energy_j",
    "links",
    "info_delivered",
    "diffusion_delivered",
    "primitive",
    "eig_min",
    "eig_max",
    "rmse_position_m",
    "rmse_velocity_m_per_s",
];

fn trajectory_rows(cfg: &ScenarioConfig, per_variant: &[&RunResult]) -> Vec<String> {
    let initial = cfg.initial_estimate();
    let means: Vec<Vec<[f64; 3]>> = per_variant.iter().map(|r| r.mean_positions(&initial)).collect();
    let Some(first) = per_variant.first() else { return Vec::new() };
    (0..first.truth.len())
        .map(|k| {
            let t = first.truth[k].position();
            let mut row = format!("{k},{},{},{}", num(t[0]), num(t[1]), num(t[2]));
            for m in &means {
                for v in m[k] {
                    row.push(',');
                    row.push_str(&num(v));
                }
            }
            row
        })
        .collect()
}

pub fn simulate(args: &CommonArgs, cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let variant = cfg.variants[0];
    let mc = run_monte_carlo(cfg, variant, args.worker_count())?;
    let mut out = OutputDir::create(&args.out, args.format, "simulate", cfg)?;
    out.csv("rmse_position.csv", &["step", "value"], series_rows(&[mc.report.rmse_position()]))?;
    out.csv("rmse_velocity.csv", &["step", "value"], series_rows(&[mc.report.rmse_velocity()]))?;
    if let Some(first) = mc.runs.first() {
        out.csv(
            "trajectory.csv",
            &["step", "truth_x", "truth_y", "truth_z", "est_x", "est_y", "est_z"],
            trajectory_rows(cfg, &[first]),
        )?;
    }
    for r in &mc.runs {
        out.csv(&format!("telemetry/run_{}.csv", r.run), &TELEMETRY_COLUMNS, telemetry_rows(r))?;
    }
    out.json(
        "summary.json",
        json!({
            "results": [&mc.report],
            "trajectory_run": mc.runs.first().map(|r| r.run),
            "covariance_bounds": bounds_block(cfg, &mc.runs),
        }),
    )?;
    let exceeded = mc.report.failure_threshold_exceeded;
    Ok(finish(&out, exceeded, describe(&mc.report)))
}

pub fn compare(args: &CommonArgs, cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let workers = args.worker_count();
    let mut outputs = Vec::with_capacity(cfg.variants.len());
    for &v in &cfg.variants {
        outputs.push(run_monte_carlo(cfg, v, workers)?);
    }
    let labels: Vec<&str> = cfg.variants.iter().map(|v| v.label()).collect();
    let mut out = OutputDir::create(&args.out, args.format, "compare", cfg)?;

    let header: Vec<&str> = std::iter::once("step").chain(labels.iter().copied()).collect();
    let pos: Vec<&[f64]> = outputs.iter().map(|o| o.report.rmse_position()).collect();
    let vel: Vec<&[f64]> = outputs.iter().map(|o| o.report.rmse_velocity()).collect();
    out.csv("rmse_position.csv", &header, series_rows(&pos))?;
    out.csv("rmse_velocity.csv", &header, series_rows(&vel))?;

    // the first run every variant completed, so the truth is shared
    let common = (0..cfg.runs).find(|&i| outputs.iter().all(|o| o.runs.iter().any(|r| r.run == i)));
    if let Some(run) = common {
        let picked: Vec<&RunResult> = outputs.iter().map(|o| o.runs.iter().find(|r| r.run == run).unwrap()).collect();
        let mut cols = vec!["step".to_string(), "truth_x".into(), "truth_y".into(), "truth_z".into()];
        for l in &labels {
            cols.extend(["x", "y", "z"].map(|a| format!("{l}_{a}")));
        }
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        out.csv("trajectory.csv", &cols, trajectory_rows(cfg, &picked))?;
    }

    let mut table = Vec::new();
    let mut rows = Vec::new();
    for o in &outputs {
        let s = &o.report.steady_state;
        let (rp, rv) = reported(o.report.variant);
        table.push(json!({
            "variant": o.report.variant,
            "rmse_position_m": s.rmse_position_m,
            "rmse_position_se_m": s.rmse_position_se_m,
            "rmse_velocity_m_per_s": s.rmse_velocity_m_per_s,
            "rmse_velocity_se_m_per_s": s.rmse_velocity_se_m_per_s,
            "reported_q05_position_m": rp,
            "reported_q05_velocity_m_per_s": rv,
        }));
        rows.push(format!(
            "{},{},{},{},{},{},{}",
            o.report.variant,
            num(s.rmse_position_m),
            num(s.rmse_position_se_m),
            num(s.rmse_velocity_m_per_s),
            num(s.rmse_velocity_se_m_per_s),
            num(rp),
            num(rv)
        ));
    }
    out.csv(
        "steady_state.csv",
        &[
            "variant",
            "rmse_position_m",
            "rmse_position_se_m",
            "rmse_velocity_m_per_s",
            "rmse_velocity_se_m_per_s",
            "reported_q05_position_m",
            "reported_q05_velocity_m_per_s",
        ],
        rows,
    )?;
    let reports: Vec<&MetricsReport> = outputs.iter().map(|o| &o.report).collect();
    out.json(
        "summary.json",
        json!({ "results": reports, "steady_state": table, "trajectory_run": common }),
    )?;
    let exceeded = reports.iter().any(|r| r.failure_threshold_exceeded);
    let text: Vec<String> = reports.iter().map(|r| describe(r)).collect();
    Ok(finish(&out, exceeded, text.join("\n")))
}

pub fn sweep(args: &CommonArgs, cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let levels = cfg
        .sweep
        .clone()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| CliError::Config("sweep: the scenario defines no sweep levels".into()))?;
    let variant = cfg.variants[0];
    let reports = run_sweep(cfg, &levels, variant, args.worker_count())?;
    let mut out = OutputDir::create(&args.out, args.format, "sweep", cfg)?;
    let rows: Vec<String> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s = &r.steady_state;
            let c = r.change_rates.clone().unwrap_or_default();
            [
                i.to_string(),
                opt_num(r.link.q()),
                opt_num(r.link.power_mw()),
                num(r.energy.power_mw),
                num(s.rmse_position_m),
                num(s.rmse_position_se_m),
                num(s.rmse_velocity_m_per_s),
                num(s.rmse_velocity_se_m_per_s),
                num(r.energy.joules_per_s),
                opt_num(c.rmse_position),
                opt_num(c.rmse_velocity),
                opt_num(c.energy),
            ]
            .join(",")
        })
        .collect();
    out.csv(
        "sweep.csv",
        &[
            "level",
            "q",
            "power_mw",
            "accounted_power_mw",
            "rmse_position_m",
            "rmse_position_se_m",
            "rmse_velocity_m_per_s",
            "rmse_velocity_se_m_per_s",
            "energy_j_per_s",
            "change_rmse_position",
            "change_rmse_velocity",
            "change_energy",
        ],
        rows,
    )?;
    let header: Vec<String> = std::iter::once("step".to_string()).chain((0..reports.len()).map(|i| format!("level_{i}"))).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let pos: Vec<&[f64]> = reports.iter().map(|r| r.rmse_position()).collect();
    let vel: Vec<&[f64]> = reports.iter().map(|r| r.rmse_velocity()).collect();
    out.csv("rmse_position.csv", &header, series_rows(&pos))?;
    out.csv("rmse_velocity.csv", &header, series_rows(&vel))?;
    out.json(
        "summary.json",
        json!({ "variant": variant, "reference_level": fadetrack_core::sim::reference_level(&levels), "results": reports }),
    )?;
    let exceeded = reports.iter().any(|r| r.failure_threshold_exceeded);
    let text: Vec<String> = reports
        .iter()
        .map(|r| {
            let c = r.change_rates.clone().unwrap_or_default();
            let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:+.2}%", 100.0 * v));
            format!(
                "{}power={} mW: RMSE {:.3} m ({}), {:.3} m/s ({}), energy {}",
                r.link.q().map_or(String::new(), |q| format!("q={} ", num(q))),
                num(r.energy.power_mw),
                r.steady_state.rmse_position_m,
                pct(c.rmse_position),
                r.steady_state.rmse_velocity_m_per_s,
                pct(c.rmse_velocity),
                pct(c.energy)
            )
        })
        .collect();
    Ok(finish(&out, exceeded, text.join("\n")))
}

pub fn power_map_cmd(args: &CommonArgs, cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let grid = cfg.power_map.unwrap_or_default();
    let rows = power_map(&cfg.channel.params(), &grid);
    let mut out = OutputDir::create(&args.out, args.format, "power-map", cfg)?;
    out.csv(
        "power_map.csv",
        &["power_mw", "ber", "q"],
        rows.iter().map(|r| format!("{},{},{}", num(r.power_mw), num(r.ber), num(r.q))),
    )?;
    out.json("power_map.json", json!({ "grid": grid, "rows": rows }))?;
    let summary = format!("power map over {} points in [{}, {}] mW", grid.points, num(grid.min_mw), num(grid.max_mw));
    Ok(finish(&out, false, summary))
}
