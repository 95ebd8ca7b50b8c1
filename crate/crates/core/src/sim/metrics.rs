//! RMSE aggregation, steady-state statistics and energy accounting.

use serde::{Deserialize, Serialize};

use crate::filter::{FilterVariant, LinkTally};

use super::config::{ChannelConfig, LinkMode, ScenarioConfig};
use super::monte_carlo::{RunFailure, RunResult};

/// `sqrt(mean over runs and nodes of squared errors)` per step.
///
/// `per_run[m][k][i]` is the squared error of node `i` at step `k` in run
/// `m`. Summation runs over runs, then nodes, in index order.
pub fn rmse_series(per_run: &[&[Vec<f64>]]) -> Vec<f64> {
    let Some(first) = per_run.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|k| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for run in per_run {
                for e in &run[k] {
                    sum += e;
                    count += 1;
                }
            }
            (sum / count as f64).sqrt()
        })
        .collect()
}

pub fn rmse_position(runs: &[RunResult]) -> Vec<f64> {
    rmse_series(&runs.iter().map(|r| r.sq_pos_err.as_slice()).collect::<Vec<_>>())
}

pub fn rmse_velocity(runs: &[RunResult]) -> Vec<f64> {
    rmse_series(&runs.iter().map(|r| r.sq_vel_err.as_slice()).collect::<Vec<_>>())
}

/// Mean of the last `window` values.
pub fn tail_mean(series: &[f64], window: usize) -> f64 {
    let tail = &series[series.len().saturating_sub(window)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Per-run steady-state statistic: mean over the window of the node RMSE.
pub fn per_run_steady(sq: &[Vec<f64>], window: usize) -> f64 {
    let per_step: Vec<f64> = sq
        .iter()
        .map(|row| (row.iter().sum::<f64>() / row.len() as f64).sqrt())
        .collect();
    tail_mean(&per_step, window)
}

/// Sample standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub window: usize,
    pub rmse_position_m: f64,
    /// Across-run standard error of the per-run steady-state position RMSE.
    pub rmse_position_se_m: f64,
    pub rmse_velocity_m_per_s: f64,
    pub rmse_velocity_se_m_per_s: f64,
}

/// Energy spent by attempted transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRate {
    pub transmissions: u64,
    /// Per-transmission power used for the rate, mW.
    pub power_mw: f64,
    pub packet_bits: u32,
    pub bit_rate_bps: f64,
    pub duration_s: f64,
    pub joules_per_s: f64,
}

/// `(transmissions · u · l / r) / duration`. `power_mw` is the fixed
/// transmit power; when absent the mean over the tallied transmissions is
/// used.
pub fn energy_accounting(tally: &LinkTally, power_mw: Option<f64>, channel: &ChannelConfig, duration_s: f64) -> EnergyRate {
    let power_mw = power_mw.unwrap_or_else(|| {
        if tally.transmissions == 0 {
            0.0
        } else {
            tally.power_sum_w / tally.transmissions as f64 * 1e3
        }
    });
    let joules = tally.transmissions as f64 * power_mw * 1e-3 * channel.packet_bits as f64 / channel.bit_rate_bps;
    EnergyRate {
        transmissions: tally.transmissions,
        power_mw,
        packet_bits: channel.packet_bits,
        bit_rate_bps: channel.bit_rate_bps,
        duration_s,
        joules_per_s: if duration_s > 0.0 { joules / duration_s } else { 0.0 },
    }
}

/// Signed relative change `rate / reference - 1`, built factor by factor so
/// that identical counts, packet settings and durations contribute exactly
/// one and the result is exactly `u / u_ref - 1`.
pub fn energy_change_rate(rate: &EnergyRate, reference: &EnergyRate) -> Option<f64> {
    if reference.transmissions == 0 || reference.power_mw == 0.0 || rate.duration_s == 0.0 {
        return None;
    }
    let count = rate.transmissions as f64 / reference.transmissions as f64;
    let power = rate.power_mw / reference.power_mw;
    let packet = (rate.packet_bits as f64 / rate.bit_rate_bps) / (reference.packet_bits as f64 / reference.bit_rate_bps);
    let time = reference.duration_s / rate.duration_s;
    Some(count * power * packet * time - 1.0)
}

/// Signed relative change of a scalar metric.
pub fn change_rate(value: f64, reference: f64) -> Option<f64> {
    (reference != 0.0 && reference.is_finite()).then(|| value / reference - 1.0)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChangeRates {
    pub rmse_position: Option<f64>,
    pub rmse_velocity: Option<f64>,
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub variant: FilterVariant,
    pub link: LinkMode,
    pub runs_requested: usize,
    pub runs_completed: usize,
    pub failures: Vec<RunFailure>,
    /// More runs aborted than the configured threshold allows.
    pub failure_threshold_exceeded: bool,
    pub rmse_position_m: Vec<f64>,
    pub rmse_velocity_m_per_s: Vec<f64>,
    pub steady_state: SteadyState,
    pub energy: EnergyRate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change_rates: Option<ChangeRates>,
}

impl MetricsReport {
    pub fn rmse_position(&self) -> &[f64] {
        &self.rmse_position_m
    }

    pub fn rmse_velocity(&self) -> &[f64] {
        &self.rmse_velocity_m_per_s
    }

    /// Fills `change_rates` against `reference`.
    pub fn set_change_rates(&mut self, reference: &MetricsReport) {
        self.change_rates = Some(ChangeRates {
            rmse_position: change_rate(self.steady_state.rmse_position_m, reference.steady_state.rmse_position_m),
            rmse_velocity: change_rate(
                self.steady_state.rmse_velocity_m_per_s,
                reference.steady_state.rmse_velocity_m_per_s,
            ),
            energy: energy_change_rate(&self.energy, &reference.energy),
        });
    }
}

pub(crate) fn summarize(
    cfg: &ScenarioConfig,
    link: &LinkMode,
    variant: FilterVariant,
    runs: &[RunResult],
    failures: Vec<RunFailure>,
) -> MetricsReport {
    let w = cfg.steady_state_window;
    let rp = rmse_position(runs);
    let rv = rmse_velocity(runs);
    let sp: Vec<f64> = runs.iter().map(|r| per_run_steady(&r.sq_pos_err, w)).collect();
    let sv: Vec<f64> = runs.iter().map(|r| per_run_steady(&r.sq_vel_err, w)).collect();
    let nan_if_empty = |s: &[f64]| if s.is_empty() { f64::NAN } else { tail_mean(s, w) };

    let mut tally = LinkTally::default();
    for r in runs {
        for t in &r.tally {
            tally.add(t);
        }
    }
    // a power range is accounted at its realized mean
    let power = if link.is_power_range() { None } else { Some(link.power_mw().unwrap_or(0.0)) };
    let duration = (runs.len() * cfg.steps) as f64 * cfg.period_s;

    MetricsReport {
        variant,
        link: *link,
        runs_requested: cfg.runs,
        runs_completed: runs.len(),
        failure_threshold_exceeded: failures.len() as f64 > cfg.failure_threshold * cfg.runs as f64,
        failures,
        steady_state: SteadyState {
            window: w,
            rmse_position_m: nan_if_empty(&rp),
            rmse_position_se_m: standard_error(&sp),
            rmse_velocity_m_per_s: nan_if_empty(&rv),
            rmse_velocity_se_m_per_s: standard_error(&sv),
        },
        rmse_position_m: rp,
        rmse_velocity_m_per_s: rv,
        energy: energy_accounting(&tally, power, &cfg.channel, duration),
        change_rates: None,
    }
}
