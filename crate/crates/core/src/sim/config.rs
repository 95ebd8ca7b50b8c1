//! Scenario description, validation, and assembly into a [`NetworkModel`].

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, FadingParams, LinkModel};
use crate::dynamics::{place_in_box, process_noise_cov, transition_matrix, MotionParams, SensorNode};
use crate::error::{Error, Result};
use crate::filter::{FilterOptions, FilterVariant, NetworkModel, NodeEstimate, NodeModel};
use crate::network::Graph;
use crate::numerics::{Matrix, Purpose, RngStream, StreamId, Vector};

use super::diagnostics::BoundConstants;

/// A per-node parameter: one value for all nodes, an explicit list, or
/// `scale * sqrt(i)` for the 1-based node index `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerNode {
    Constant(f64),
    List(Vec<f64>),
    SqrtIndex { scale_sqrt_index: f64 },
}

impl PerNode {
    pub fn value(&self, index: usize) -> f64 {
        match self {
            PerNode::Constant(v) => *v,
            PerNode::List(v) => v[index],
            PerNode::SqrtIndex { scale_sqrt_index } => scale_sqrt_index * ((index + 1) as f64).sqrt(),
        }
    }

    fn check(&self, field: &str, nodes: usize, ok: impl Fn(f64) -> bool, rule: &str) -> Result<()> {
        if let PerNode::List(v) = self {
            if v.len() != nodes {
                return Err(Error::Config(format!("{field}: expected {nodes} values, got {}", v.len())));
            }
        }
        for i in 0..nodes {
            let v = self.value(i);
            if !v.is_finite() || !ok(v) {
                return Err(Error::Config(format!("{field}: node {i} value {v} must be {rule}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Uniform over `origin + [0, 1]^3 ⊙ extent`.
    Box {
        /// Lower corner.
        origin_m: [f64; 3],
        extent_m: [f64; 3],
        /// Seed of the placement stream, independent of the master seed so
        /// one deployment can be reused across experiments.
        seed: u64,
        /// Redraw positions for every Monte Carlo run.
        #[serde(default)]
        per_run: bool,
    },
    Explicit { positions_m: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    pub turn_rate_rad_per_s: f64,
    /// η² assumed by the filters.
    pub process_noise_intensity: f64,
    /// η² driving the simulated target; defaults to the filter value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_noise_intensity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub meas_noise_var_m2: PerNode,
    pub additive_noise_var_m2: PerNode,
    pub fading_scale: PerNode,
    pub estimation_error_scale: PerNode,
    pub estimation_error_bound: PerNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub gain_db: f64,
    pub packet_bits: u32,
    pub bit_rate_bps: f64,
    pub boltzmann_j_per_k: f64,
    pub temperature_k: f64,
}

impl ChannelConfig {
    pub fn params(&self) -> ChannelParams {
        ChannelParams::from_db(
            self.gain_db,
            self.packet_bits,
            self.bit_rate_bps,
            self.boltzmann_j_per_k,
            self.temperature_k,
        )
    }
}

/// How link reliability is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkMode {
    Q {
        q: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nominal_power_mw: Option<f64>,
    },
    QRange {
        q_min: f64,
        q_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nominal_power_mw: Option<f64>,
    },
    Power {
        power_mw: f64,
    },
    PowerRange {
        min_mw: f64,
        max_mw: f64,
    },
}

impl LinkMode {
    pub fn model(&self) -> LinkModel {
        let w = |mw: f64| mw * 1e-3;
        match *self {
            LinkMode::Q { q, nominal_power_mw } => LinkModel::Probability {
                q,
                nominal_power_w: nominal_power_mw.map(w),
            },
            LinkMode::QRange { q_min, q_max, nominal_power_mw } => LinkModel::ProbabilityRange {
                min: q_min,
                max: q_max,
                nominal_power_w: nominal_power_mw.map(w),
            },
            LinkMode::Power { power_mw } => LinkModel::Power { power_w: w(power_mw) },
            LinkMode::PowerRange { min_mw, max_mw } => LinkModel::PowerRange {
                min_w: w(min_mw),
                max_w: w(max_mw),
            },
        }
    }

    /// Transmit power used for energy accounting, mW (mean of a range).
    pub fn power_mw(&self) -> Option<f64> {
        match *self {
            LinkMode::Q { nominal_power_mw, .. } | LinkMode::QRange { nominal_power_mw, .. } => nominal_power_mw,
            LinkMode::Power { power_mw } => Some(power_mw),
            LinkMode::PowerRange { min_mw, max_mw } => Some(0.5 * (min_mw + max_mw)),
        }
    }

    /// Nominal success probability (mean of a range), if configured directly.
    pub fn q(&self) -> Option<f64> {
        match *self {
            LinkMode::Q { q, .. } => Some(q),
            LinkMode::QRange { q_min, q_max, .. } => Some(0.5 * (q_min + q_max)),
            _ => None,
        }
    }

    pub fn is_power_range(&self) -> bool {
        matches!(self, LinkMode::PowerRange { .. })
    }

    fn validate(&self, field: &str) -> Result<()> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        let pow = |v: f64| v.is_finite() && v >= 0.0;
        let ok = match *self {
            LinkMode::Q { q, nominal_power_mw } => prob(q) && nominal_power_mw.is_none_or(pow),
            LinkMode::QRange { q_min, q_max, nominal_power_mw } => {
                prob(q_min) && prob(q_max) && q_min <= q_max && nominal_power_mw.is_none_or(pow)
            }
            LinkMode::Power { power_mw } => pow(power_mw),
            LinkMode::PowerRange { min_mw, max_mw } => pow(min_mw) && pow(max_mw) && min_mw <= max_mw,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{field}: invalid link settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerGrid {
    pub min_mw: f64,
    pub max_mw: f64,
    pub points: usize,
}

impl Default for PowerGrid {
    fn default() -> Self {
        Self {
            min_mw: 0.0,
            max_mw: 400.0,
            points: 401,
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub nodes: usize,
    pub placement: Placement,
    pub comm_range_m: f64,
    /// In-neighbor lists (0-based, self omitted). Overrides range-based
    /// links when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<usize>>>,
    pub steps: usize,
    pub period_s: f64,
    pub runs: usize,
    pub motion: MotionConfig,
    pub sensors: SensorConfig,
    pub channel: ChannelConfig,
    pub link: LinkMode,
    pub variants: Vec<FilterVariant>,
    #[serde(default)]
    pub filter: FilterOptions,
    pub initial_truth: [f64; 6],
    pub initial_estimate: [f64; 6],
    pub initial_cov_diag: [f64; 6],
    pub master_seed: u64,
    #[serde(default = "default_window")]
    pub steady_state_window: usize,
    /// Largest tolerated fraction of aborted runs.
    #[serde(default = "default_failure_threshold")]
    pub failure_threshold: f64,
    /// Compute per-step Perron vectors and stability ratios.
    #[serde(default)]
    pub stability_diagnostics: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<LinkMode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_map: Option<PowerGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundConstants>,
}

fn default_window() -> usize {
    20
}

fn default_failure_threshold() -> f64 {
    0.01
}

impl ScenarioConfig {
    /// The underwater tracking scenario: 20 nodes in a 1000 × 1000 × 1500 m
    /// volume, 600 m links, a turning target, links delivering with q = 0.5.
    pub fn reference() -> Self {
        Self {
            nodes: 20,
            placement: Placement::Box {
                origin_m: [-500.0, -500.0, -1500.0],
                extent_m: [1000.0, 1000.0, 1500.0],
                seed: 11,
                per_run: false,
            },
            comm_range_m: 600.0,
            adjacency: None,
            steps: 100,
            period_s: 1.0,
            runs: 100,
            motion: MotionConfig {
                turn_rate_rad_per_s: 0.52,
                process_noise_intensity: 5.0,
                truth_noise_intensity: Some(0.0),
            },
            sensors: SensorConfig {
                meas_noise_var_m2: PerNode::SqrtIndex { scale_sqrt_index: 10.0 },
                additive_noise_var_m2: PerNode::SqrtIndex { scale_sqrt_index: 1.0 },
                fading_scale: PerNode::Constant(0.5),
                estimation_error_scale: PerNode::SqrtIndex { scale_sqrt_index: 1.0 },
                estimation_error_bound: PerNode::Constant(0.1),
            },
            channel: ChannelConfig {
                gain_db: -150.0,
                packet_bits: 1000,
                bit_rate_bps: 6000.0,
                boltzmann_j_per_k: 1.38e-23,
                temperature_k: 280.0,
            },
            link: LinkMode::Q {
                q: 0.5,
                nominal_power_mw: Some(140.0),
            },
            variants: vec![FilterVariant::Fc],
            filter: FilterOptions::default(),
            initial_truth: [0.0, 10.0, 0.0, 3.0, -1500.0, 2.0],
            initial_estimate: [20.0, -23.0, 80.0, 32.0, -1450.0, -26.0],
            initial_cov_diag: [100.0; 6],
            master_seed: 20_240_601,
            steady_state_window: default_window(),
            failure_threshold: default_failure_threshold(),
            stability_diagnostics: false,
            sweep: None,
            power_map: None,
            bounds: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.nodes == 0 {
            return err("nodes: must be at least 1".into());
        }
        if !(self.comm_range_m > 0.0) || !self.comm_range_m.is_finite() {
            return err(format!("comm_range_m: {} must be positive", self.comm_range_m));
        }
        if self.steps == 0 {
            return err("steps: must be at least 1".into());
        }
        if !(self.period_s > 0.0) {
            return err(format!("period_s: {} must be positive", self.period_s));
        }
        if self.runs == 0 {
            return err("runs: must be at least 1".into());
        }
        match &self.placement {
            Placement::Box { origin_m, extent_m, .. } => {
                if extent_m.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return err("placement.extent_m: extents must be non-negative".into());
                }
                if origin_m.iter().any(|v| !v.is_finite()) {
                    return err("placement.origin_m: must be finite".into());
                }
            }
            Placement::Explicit { positions_m } => {
                if positions_m.len() != self.nodes {
                    return err(format!(
                        "placement.positions_m: expected {} positions, got {}",
                        self.nodes,
                        positions_m.len()
                    ));
                }
                if positions_m.iter().flatten().any(|v| !v.is_finite()) {
                    return err("placement.positions_m: positions must be finite".into());
                }
            }
        }
        if let Some(adj) = &self.adjacency {
            if adj.len() != self.nodes {
                return err(format!("adjacency: expected {} lists, got {}", self.nodes, adj.len()));
            }
            if adj.iter().flatten().any(|&j| j >= self.nodes) {
                return err("adjacency: node index out of range".into());
            }
        }
        if !self.motion.turn_rate_rad_per_s.is_finite() {
            return err("motion.turn_rate_rad_per_s: must be finite".into());
        }
        if !(self.motion.process_noise_intensity >= 0.0) {
            return err("motion.process_noise_intensity: must be non-negative".into());
        }
        if self.motion.truth_noise_intensity.is_some_and(|v| !(v >= 0.0)) {
            return err("motion.truth_noise_intensity: must be non-negative".into());
        }
        let s = &self.sensors;
        let n = self.nodes;
        s.meas_noise_var_m2.check("sensors.meas_noise_var_m2", n, |v| v > 0.0, "positive")?;
        s.additive_noise_var_m2.check("sensors.additive_noise_var_m2", n, |v| v >= 0.0, "non-negative")?;
        s.fading_scale.check("sensors.fading_scale", n, |v| v > 0.0, "positive")?;
        s.estimation_error_scale.check("sensors.estimation_error_scale", n, |v| v > 0.0, "positive")?;
        s.estimation_error_bound.check("sensors.estimation_error_bound", n, |v| v > 0.0 && v < 1.0, "in (0, 1)")?;
        let c = &self.channel;
        if !(c.bit_rate_bps > 0.0 && c.boltzmann_j_per_k > 0.0 && c.temperature_k > 0.0 && c.packet_bits > 0)
            || !c.gain_db.is_finite()
        {
            return err("channel: bit rate, Boltzmann constant, temperature and packet length must be positive".into());
        }
        self.link.validate("link")?;
        if self.variants.is_empty() {
            return err("variants: list at least one filter variant".into());
        }
        if !(self.filter.kappa + 6.0 > 0.0) {
            return err(format!("filter.kappa: n + kappa = {} must be positive", 6.0 + self.filter.kappa));
        }
        if !(self.filter.jitter >= 0.0) {
            return err("filter.jitter: must be non-negative".into());
        }
        if self.initial_truth.iter().chain(&self.initial_estimate).any(|v| !v.is_finite()) {
            return err("initial_truth / initial_estimate: must be finite".into());
        }
        if self.initial_cov_diag.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return err("initial_cov_diag: entries must be positive".into());
        }
        if self.steady_state_window == 0 || self.steady_state_window > self.steps {
            return err(format!(
                "steady_state_window: {} must be in 1..={}",
                self.steady_state_window, self.steps
            ));
        }
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return err("failure_threshold: must be in [0, 1]".into());
        }
        if let Some(levels) = &self.sweep {
            if levels.is_empty() {
                return err("sweep: list at least one level".into());
            }
            for (k, l) in levels.iter().enumerate() {
                l.validate(&format!("sweep[{k}]"))?;
            }
        }
        if let Some(g) = &self.power_map {
            if !(g.min_mw >= 0.0 && g.max_mw >= g.min_mw && g.points >= 1) {
                return err("power_map: need 0 <= min_mw <= max_mw and points >= 1".into());
            }
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        Ok(())
    }

    pub fn motion_params(&self) -> MotionParams {
        MotionParams::new(self.motion.turn_rate_rad_per_s, self.period_s, self.motion.process_noise_intensity)
    }

    /// Motion model of the simulated target.
    pub fn truth_motion_params(&self) -> MotionParams {
        MotionParams::new(
            self.motion.turn_rate_rad_per_s,
            self.period_s,
            self.motion.truth_noise_intensity.unwrap_or(self.motion.process_noise_intensity),
        )
    }

    /// Node positions for `run`.
    pub fn positions(&self, run: usize) -> Vec<[f64; 3]> {
        match &self.placement {
            Placement::Explicit { positions_m } => positions_m.clone(),
            Placement::Box { origin_m, extent_m, seed, per_run } => {
                let mut id = StreamId::new(Purpose::Placement);
                if *per_run {
                    id = id.run(run);
                }
                place_in_box(self.nodes, *origin_m, *extent_m, &mut RngStream::new(*seed, id))
            }
        }
    }

    pub fn graph(&self, positions: &[[f64; 3]]) -> Graph {
        match &self.adjacency {
            Some(adj) => Graph::from_adjacency(adj),
            None => Graph::from_positions(positions, self.comm_range_m),
        }
    }

    pub fn node_models(&self, positions: &[[f64; 3]]) -> Vec<NodeModel> {
        let s = &self.sensors;
        positions
            .iter()
            .enumerate()
            .map(|(i, p)| NodeModel {
                sensor: SensorNode {
                    id: i + 1,
                    position: *p,
                    meas_noise_var: s.meas_noise_var_m2.value(i),
                    additive_noise_var: s.additive_noise_var_m2.value(i),
                },
                fading: FadingParams {
                    sigma_theta: s.fading_scale.value(i),
                    sigma_eps: s.estimation_error_scale.value(i),
                    delta_eps: s.estimation_error_bound.value(i),
                },
            })
            .collect()
    }

    /// The network model used by `run`, with `link` in place of the
    /// configured link mode.
    pub fn network_model(&self, run: usize, link: &LinkMode) -> NetworkModel {
        let positions = self.positions(run);
        let motion = self.motion_params();
        NetworkModel {
            graph: self.graph(&positions),
            nodes: self.node_models(&positions),
            transition: transition_matrix(&motion),
            process_noise: process_noise_cov(&motion),
            channel: self.channel.params(),
            links: link.model(),
            options: self.filter,
            record_diffusion: self.stability_diagnostics,
        }
    }

    pub fn initial_estimate(&self) -> NodeEstimate {
        NodeEstimate::new(
            Vector::from_column_slice(&self.initial_estimate),
            Matrix::from_diagonal(&Vector::from_column_slice(&self.initial_cov_diag)),
        )
    }

    /// Same scenario with the link mode replaced.
    pub fn with_link(&self, link: LinkMode) -> Self {
        Self { link, ..self.clone() }
    }
}
