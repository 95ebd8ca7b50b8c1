//! The distributed sigma-point filter with fading compensation, and its two
//! baselines.

mod fusion;
mod step;
mod ukf;

use serde::{Deserialize, Serialize};

use crate::numerics::{Matrix, Vector};

pub use fusion::{
    diffuse, diffuse_with, gain_form_update, information_pair, local_fuse, local_fuse_with,
    InformationPair,
};
pub use step::{step_network, LinkTally, NetworkModel, NodeModel, StepContext, StepTelemetry};
pub use ukf::{
    innovation_covariances, predict, predict_measurement, predict_measurement_with,
    sample_sigma_points, sigma_weights, Prediction, SigmaPointSet,
};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEstimate {
    pub x: Vector,
    pub p: Matrix,
}

impl NodeEstimate {
    pub fn new(x: Vector, p: Matrix) -> Self {
        assert_eq!(x.len(), p.nrows());
        Self { x, p }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }
}

/// Which fading knowledge the filter uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FilterVariant {
    /// Estimated fading coefficient with inflated noise covariance.
    Fc,
    /// True fading coefficient.
    #[serde(rename = "eFc")]
    EFc,
    /// Fading ignored.
    #[serde(rename = "nFc")]
    NFc,
}

impl FilterVariant {
    pub const ALL: [FilterVariant; 3] = [FilterVariant::Fc, FilterVariant::EFc, FilterVariant::NFc];

    pub fn label(&self) -> &'static str {
        match self {
            FilterVariant::Fc => "Fc",
            FilterVariant::EFc => "eFc",
            FilterVariant::NFc => "nFc",
        }
    }
}

impl std::fmt::Display for FilterVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for FilterVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Fc" => Ok(FilterVariant::Fc),
            "eFc" => Ok(FilterVariant::EFc),
            "nFc" => Ok(FilterVariant::NFc),
            other => Err(format!("unknown filter variant {other:?} (expected Fc, eFc or nFc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterOptions {
    /// Sigma-point scaling κ.
    #[serde(default)]
    pub kappa: f64,
    /// Re-symmetrize every produced covariance. Turning this off is only
    /// useful as a negative control for the symmetry checks.
    #[serde(default = "default_true")]
    pub resymmetrize: bool,
    /// Starting jitter for covariance square roots; 0 selects the relative
    /// default.
    #[serde(default)]
    pub jitter: f64,
}

fn default_true() -> bool {
    true
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            resymmetrize: true,
            jitter: 0.0,
        }
    }
}
