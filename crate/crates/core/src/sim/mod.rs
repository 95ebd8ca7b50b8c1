//! Scenario assembly, Monte Carlo runs, metrics and bound diagnostics.

pub mod config;
pub mod diagnostics;
pub mod metrics;
pub mod monte_carlo;
pub mod sweep;

pub use config::{ChannelConfig, LinkMode, MotionConfig, PerNode, Placement, PowerGrid, ScenarioConfig, SensorConfig};
pub use diagnostics::{covariance_bounds, empirical_bound_check, stability_margin, BoundCheck, BoundConstants, StabilityReport};
pub use metrics::{
    change_rate, energy_accounting, energy_change_rate, rmse_position, rmse_series, rmse_velocity, ChangeRates, EnergyRate,
    MetricsReport, SteadyState,
};
pub use monte_carlo::{run_monte_carlo, run_monte_carlo_with, run_single, MonteCarloOutput, RunFailure, RunResult};
pub use sweep::{power_map, reference_level, run_sweep, PowerMapRow};
