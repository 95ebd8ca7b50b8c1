//! Parameter sweeps over link settings and the power-to-reliability map.

use serde::{Deserialize, Serialize};

use crate::channel::{ber_bfsk, packet_success_prob, ChannelParams};
use crate::error::Result;
use crate::filter::FilterVariant;

use super::config::{LinkMode, PowerGrid, ScenarioConfig};
use super::metrics::MetricsReport;
use super::monte_carlo::run_monte_carlo_with;

/// Position of `level` in the ordering used to pick the reference level:
/// by transmit power when set, otherwise by success probability.
fn level_key(level: &LinkMode) -> (f64, f64) {
    (level.power_mw().unwrap_or(f64::NEG_INFINITY), level.q().unwrap_or(f64::NEG_INFINITY))
}

/// Index of the highest level (the last one on ties).
pub fn reference_level(levels: &[LinkMode]) -> usize {
    let mut best = 0;
    for (i, l) in levels.iter().enumerate() {
        if level_key(l) >= level_key(&levels[best]) {
            best = i;
        }
    }
    best
}

/// One report per level, each carrying change rates against the highest
/// level.
pub fn run_sweep(cfg: &ScenarioConfig, levels: &[LinkMode], variant: FilterVariant, workers: usize) -> Result<Vec<MetricsReport>> {
    let mut reports = Vec::with_capacity(levels.len());
    for level in levels {
        reports.push(run_monte_carlo_with(cfg, level, variant, workers)?.report);
    }
    if !reports.is_empty() {
        let reference = reports[reference_level(levels)].clone();
        for r in &mut reports {
            r.set_change_rates(&reference);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMapRow {
    pub power_mw: f64,
    pub ber: f64,
    pub q: f64,
}

/// BER and packet success probability over an evenly spaced power grid.
pub fn power_map(channel: &ChannelParams, grid: &PowerGrid) -> Vec<PowerMapRow> {
    let step = if grid.points > 1 {
        (grid.max_mw - grid.min_mw) / (grid.points - 1) as f64
    } else {
        0.0
    };
    (0..grid.points)
        .map(|i| {
            let power_mw = if i + 1 == grid.points && grid.points > 1 {
                grid.max_mw
            } else {
                grid.min_mw + step * i as f64
            };
            let ber = ber_bfsk(power_mw * 1e-3, channel);
            PowerMapRow {
                power_mw,
                ber,
                q: packet_success_prob(ber, channel.packet_bits),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_highest() {
        let u = |p| LinkMode::Power { power_mw: p };
        assert_eq!(reference_level(&[u(93.0), u(400.0), u(140.0)]), 1);
        let q = |q| LinkMode::Q { q, nominal_power_mw: None };
        assert_eq!(reference_level(&[q(0.1), q(0.5), q(1.0)]), 2);
        assert_eq!(reference_level(&[q(0.3)]), 0);
    }

    #[test]
    fn power_map_shape() {
        let rows = power_map(&ChannelParams::reference(), &PowerGrid::default());
        assert_eq!(rows.len(), 401);
        assert_eq!(rows[0].power_mw, 0.0);
        assert_eq!(rows[400].power_mw, 400.0);
        assert_eq!(rows[0].ber, 0.5);
        assert!((rows[0].q / 0.5f64.powi(1000) - 1.0).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[1].q >= w[0].q));
        // strict until q is within a few ulps of one
        assert!(rows.windows(2).filter(|w| w[1].q < 1.0 - 1e-12).all(|w| w[1].q > w[0].q));
        assert_eq!(rows[400].q, 1.0);
    }
}
