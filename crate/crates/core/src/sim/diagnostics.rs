//! Covariance bound and diffusion stability diagnostics.
//!
//! The analytic bounds depend on linearization constants that cannot be
//! observed from a run, so everything here is reported rather than enforced,
//! except strict positivity of the covariance eigenvalues.

use serde::{Deserialize, Serialize};

use crate::dynamics::{process_noise_cov, transition_matrix};
use crate::error::{Error, Result};
use crate::network::DiffusionMatrix;
use crate::numerics::{eigen_extremes, pf_left_eigenvector, rayleigh_from_uniform, truncated_normal_second_moment};

use super::config::ScenarioConfig;
use super::monte_carlo::RunResult;

/// Lower/upper bound scalars on the model quantities. `beta` bounds the
/// linearization compensation factor and `h` the measurement Jacobian norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConstants {
    pub f_lo: f64,
    pub f_hi: f64,
    pub h_lo: f64,
    pub h_hi: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub r_v_lo: f64,
    pub r_v_hi: f64,
    pub r_n_lo: f64,
    pub r_n_hi: f64,
    pub r_nu_lo: f64,
    pub r_nu_hi: f64,
    pub delta_eps_hi: f64,
}

/// Tail probability used for the fading-amplitude quantile bounds.
pub const FADING_TAIL: f64 = 1e-6;

impl BoundConstants {
    /// Every constant equal to one and no estimation error.
    pub fn unit() -> Self {
        Self {
            f_lo: 1.0,
            f_hi: 1.0,
            h_lo: 1.0,
            h_hi: 1.0,
            beta_lo: 1.0,
            beta_hi: 1.0,
            theta_lo: 1.0,
            theta_hi: 1.0,
            q_lo: 1.0,
            q_hi: 1.0,
            r_v_lo: 1.0,
            r_v_hi: 1.0,
            r_n_lo: 1.0,
            r_n_hi: 1.0,
            r_nu_lo: 1.0,
            r_nu_hi: 1.0,
            delta_eps_hi: 0.0,
        }
    }

    /// Heuristic constants for a scenario: singular values of `F`,
    /// eigenvalues of `Q`, unit range-gradient norm, `beta = 1`, fading
    /// quantiles at `FADING_TAIL`, and noise variances over the nodes. The
    /// upper fading-noise bound assumes ranges up to twice the largest
    /// node-to-start distance.
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        let motion = cfg.motion_params();
        let svd = transition_matrix(&motion).svd(false, false);
        let (f_lo, f_hi) = (svd.singular_values.min(), svd.singular_values.max());
        let (q_lo, q_hi) = eigen_extremes(&process_noise_cov(&motion));
        let positions = cfg.positions(0);
        let nodes = cfg.node_models(&positions);
        let start = [cfg.initial_truth[0], cfg.initial_truth[2], cfg.initial_truth[4]];
        let range_hi = 2.0
            * positions
                .iter()
                .map(|p| ((p[0] - start[0]).powi(2) + (p[1] - start[1]).powi(2) + (p[2] - start[2]).powi(2)).sqrt())
                .fold(0.0, f64::max);

        let fold = |f: &dyn Fn(&crate::filter::NodeModel) -> f64| {
            nodes.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        let (sig_lo, sig_hi) = fold(&|n| n.fading.sigma_theta);
        let (r_v_lo, r_v_hi) = fold(&|n| n.sensor.meas_noise_var);
        let (r_n_lo, r_n_hi) = fold(&|n| n.sensor.additive_noise_var);
        let (_, delta_eps_hi) = fold(&|n| n.fading.delta_eps);
        let (r_nu_lo, _) = fold(&|n| 2.0 * n.fading.sigma_theta.powi(2) * n.sensor.meas_noise_var + n.sensor.additive_noise_var);
        let (_, r_nu_hi) = fold(&|n| {
            let s2 = n.fading.sigma_theta.powi(2);
            let m2 = truncated_normal_second_moment(n.fading.sigma_eps, n.fading.delta_eps);
            2.0 * s2 * (n.sensor.meas_noise_var + m2 * range_hi * range_hi) + n.sensor.additive_noise_var
        });

        Self {
            f_lo,
            f_hi,
            h_lo: 1.0,
            h_hi: 1.0,
            beta_lo: 1.0,
            beta_hi: 1.0,
            theta_lo: rayleigh_from_uniform(sig_lo, FADING_TAIL),
            theta_hi: rayleigh_from_uniform(sig_hi, 1.0 - FADING_TAIL),
            q_lo,
            q_hi,
            r_v_lo,
            r_v_hi,
            r_n_lo,
            r_n_hi,
            r_nu_lo,
            r_nu_hi,
            delta_eps_hi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pairs = [
            (self.f_lo, self.f_hi),
            (self.h_lo, self.h_hi),
            (self.beta_lo, self.beta_hi),
            (self.theta_lo, self.theta_hi),
            (self.q_lo, self.q_hi),
            (self.r_v_lo, self.r_v_hi),
            (self.r_n_lo, self.r_n_hi),
            (self.r_nu_lo, self.r_nu_hi),
        ];
        for (lower, upper) in pairs {
            if !(lower > 0.0) || !(lower <= upper) || !upper.is_finite() {
                return Err(Error::InvalidBounds { lower, upper });
            }
        }
        if !(0.0..1.0).contains(&self.delta_eps_hi) {
            return Err(Error::InvalidBounds {
                lower: 0.0,
                upper: self.delta_eps_hi,
            });
        }
        Ok(())
    }
}

/// Scalar bounds `(p_lo, p_hi)` on the global covariance for `n` nodes.
pub fn covariance_bounds(bc: &BoundConstants, n: usize) -> Result<(f64, f64)> {
    bc.validate()?;
    let d = bc.delta_eps_hi;
    let info = (1.0 + d).powi(2) * n as f64 * (bc.h_hi * bc.beta_hi * bc.theta_hi).powi(2) / bc.r_nu_lo;
    let p_lo = 1.0 / (1.0 / bc.q_lo + info);
    let p_hi = bc.h_hi.powi(2) * bc.r_nu_hi / ((1.0 - d).powi(2) * bc.h_lo.powi(4) * (bc.beta_lo * bc.theta_lo).powi(2));
    if p_lo > p_hi {
        return Err(Error::InvalidBounds {
            lower: p_lo,
            upper: p_hi,
        });
    }
    Ok((p_lo, p_hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `1 + q_lo / (f_hi^2 p_hi)`.
    pub threshold: f64,
    /// `max_j c_{k+1}^j / c_k^j` for consecutive matrices; `None` when a
    /// Perron vector could not be determined uniquely.
    pub ratios: Vec<Option<f64>>,
    pub passes: Vec<Option<bool>>,
    pub indeterminate: usize,
    pub max_ratio: Option<f64>,
}

/// Ratio series of consecutive Perron vectors against the stability
/// threshold. Reducible or non-convergent steps are indeterminate.
pub fn stability_margin(cs: &[DiffusionMatrix], bc: &BoundConstants) -> Result<StabilityReport> {
    let n_nodes = cs.first().map_or(1, |c| c.0.nrows());
    let (_, p_hi) = covariance_bounds(bc, n_nodes)?;
    let threshold = 1.0 + bc.q_lo / (bc.f_hi * bc.f_hi * p_hi);
    let vectors: Vec<_> = cs
        .iter()
        .map(|c| match pf_left_eigenvector(&c.0) {
            Ok(pv) if pv.primitive => Some(pv.weights),
            _ => None,
        })
        .collect();
    let ratios: Vec<Option<f64>> = vectors
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (Some(a), Some(b)) => Some(a.iter().zip(b.iter()).map(|(x, y)| y / x).fold(f64::NEG_INFINITY, f64::max)),
            _ => None,
        })
        .collect();
    let passes = ratios.iter().map(|r| r.map(|r| r <= threshold)).collect();
    let max_ratio = ratios.iter().flatten().copied().reduce(f64::max);
    Ok(StabilityReport {
        threshold,
        indeterminate: ratios.iter().filter(|r| r.is_none()).count(),
        ratios,
        passes,
        max_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub p_lo: f64,
    pub p_hi: f64,
    /// (node, step, run) triples inspected.
    pub samples: usize,
    /// Triples with both eigenvalue extremes inside `[p_lo, p_hi]`.
    pub inside: usize,
    pub fraction_inside: f64,
    pub positive: usize,
    pub fraction_positive: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

pub fn empirical_bound_check(results: &[RunResult], p_lo: f64, p_hi: f64) -> BoundCheck {
    let mut samples = 0;
    let mut inside = 0;
    let mut positive = 0;
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_eigenvalue = f64::NEG_INFINITY;
    for r in results {
        for (lo_row, hi_row) in r.eig_min.iter().zip(&r.eig_max) {
            for (&lo, &hi) in lo_row.iter().zip(hi_row) {
                samples += 1;
                if lo > 0.0 {
                    positive += 1;
                }
                if lo >= p_lo && hi <= p_hi {
                    inside += 1;
                }
                min_eigenvalue = min_eigenvalue.min(lo);
                max_eigenvalue = max_eigenvalue.max(hi);
            }
        }
    }
    let frac = |k: usize| if samples == 0 { 1.0 } else { k as f64 / samples as f64 };
    BoundCheck {
        p_lo,
        p_hi,
        samples,
        inside,
        fraction_inside: frac(inside),
        positive,
        fraction_positive: frac(positive),
        min_eigenvalue,
        max_eigenvalue,
    }
}
