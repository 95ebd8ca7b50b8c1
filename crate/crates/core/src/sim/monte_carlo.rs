//! Parallel Monte Carlo driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate_truth, TargetState};
use crate::error::{Error, Result};
use crate::filter::{step_network, FilterVariant, LinkTally, NetworkModel, NodeEstimate, StepContext};
use crate::network::DiffusionMatrix;
use crate::numerics::{Purpose, RngStream, StreamId};

use super::config::{LinkMode, ScenarioConfig};
use super::metrics::{summarize, MetricsReport};

/// Everything recorded for one Monte Carlo run. Per-step vectors have one
/// entry per time step `1..=K`; `truth` also holds the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub truth: Vec<TargetState>,
    /// `[step][node]` global estimates.
    pub estimates: Vec<Vec<NodeEstimate>>,
    pub sq_pos_err: Vec<Vec<f64>>,
    pub sq_vel_err: Vec<Vec<f64>>,
    pub tally: Vec<LinkTally>,
    /// Joules spent per step at the drawn powers.
    pub energy_j: Vec<f64>,
    pub eig_min: Vec<Vec<f64>>,
    pub eig_max: Vec<Vec<f64>>,
    pub links: usize,
    pub info_delivered: Vec<usize>,
    pub diffusion_delivered: Vec<usize>,
    pub primitive: Vec<bool>,
    pub max_asymmetry: f64,
    /// Filled only when stability diagnostics are enabled.
    pub diffusion: Vec<DiffusionMatrix>,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.estimates.len()
    }

    /// Node-averaged position estimate per step, starting with the common
    /// initial estimate.
    pub fn mean_positions(&self, initial: &NodeEstimate) -> Vec<[f64; 3]> {
        let pos = |x: &crate::numerics::Vector| [x[0], x[2], x[4]];
        let mut out = vec![pos(&initial.x)];
        for row in &self.estimates {
            let n = row.len() as f64;
            let mut acc = [0.0; 3];
            for e in row {
                let p = pos(&e.x);
                for d in 0..3 {
                    acc[d] += p[d];
                }
            }
            out.push(acc.map(|v| v / n));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub step: Option<usize>,
    pub node: Option<usize>,
    pub message: String,
}

impl RunFailure {
    fn from_error(run: usize, e: &Error) -> Self {
        let (step, node) = match e {
            Error::NodeStep { step, node, .. } => (Some(*step), Some(*node)),
            _ => (None, None),
        };
        Self {
            run,
            step,
            node,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloOutput {
    pub report: MetricsReport,
    pub runs: Vec<RunResult>,
}

/// Simulates one run of `variant` over the network model.
pub fn run_single(cfg: &ScenarioConfig, model: &NetworkModel, variant: FilterVariant, run: usize) -> Result<RunResult> {
    let n = cfg.nodes;
    let k_max = cfg.steps;
    let motion = cfg.truth_motion_params();
    let init = cfg.initial_estimate();
    let mut truth = TargetState::new(cfg.initial_truth);
    let mut ests = vec![init; n];
    let energy_per_watt = cfg.channel.packet_bits as f64 / cfg.channel.bit_rate_bps;

    let mut out = RunResult {
        run,
        truth: Vec::with_capacity(k_max + 1),
        estimates: Vec::with_capacity(k_max),
        sq_pos_err: Vec::with_capacity(k_max),
        sq_vel_err: Vec::with_capacity(k_max),
        tally: Vec::with_capacity(k_max),
        energy_j: Vec::with_capacity(k_max),
        eig_min: Vec::with_capacity(k_max),
        eig_max: Vec::with_capacity(k_max),
        links: 0,
        info_delivered: Vec::with_capacity(k_max),
        diffusion_delivered: Vec::with_capacity(k_max),
        primitive: Vec::with_capacity(k_max),
        max_asymmetry: 0.0,
        diffusion: Vec::new(),
    };
    out.truth.push(truth);

    for step in 1..=k_max {
        let mut rng = RngStream::new(cfg.master_seed, StreamId::new(Purpose::ProcessNoise).run(run).step(step));
        truth = propagate_truth(&truth, &motion, &mut rng);
        let ctx = StepContext {
            master_seed: cfg.master_seed,
            run,
            step,
        };
        let (next, tel) = step_network(model, &ests, &truth, variant, &ctx)?;
        if let Some(i) = next.iter().position(|e| !e.is_finite()) {
            return Err(Error::SingularCovariance.at(run, step, i));
        }
        if let Some(i) = tel.eig_min.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::SingularCovariance.at(run, step, i));
        }

        let (tp, tv) = (truth.position(), truth.velocity());
        out.sq_pos_err.push(
            next.iter()
                .map(|e| (e.x[0] - tp[0]).powi(2) + (e.x[2] - tp[1]).powi(2) + (e.x[4] - tp[2]).powi(2))
                .collect(),
        );
        out.sq_vel_err.push(
            next.iter()
                .map(|e| (e.x[1] - tv[0]).powi(2) + (e.x[3] - tv[1]).powi(2) + (e.x[5] - tv[2]).powi(2))
                .collect(),
        );
        out.energy_j.push(tel.tally.power_sum_w * energy_per_watt);
        out.tally.push(tel.tally);
        out.eig_min.push(tel.eig_min);
        out.eig_max.push(tel.eig_max);
        out.links = tel.links;
        out.info_delivered.push(tel.info_delivered);
        out.diffusion_delivered.push(tel.diffusion_delivered);
        out.primitive.push(tel.primitive);
        out.max_asymmetry = out.max_asymmetry.max(tel.max_asymmetry);
        if let Some(c) = tel.diffusion {
            out.diffusion.push(c);
        }
        out.truth.push(truth);
        out.estimates.push(next.clone());
        ests = next;
    }
    Ok(out)
}

/// Runs all `cfg.runs` realizations of `variant` with link mode `link`.
///
/// Results are independent of `workers`: each run draws from its own keyed
/// streams and aggregation follows run index order.
pub fn run_monte_carlo_with(
    cfg: &ScenarioConfig,
    link: &LinkMode,
    variant: FilterVariant,
    workers: usize,
) -> Result<MonteCarloOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))?;
    let outcomes: Vec<Result<RunResult>> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run| run_single(cfg, &cfg.network_model(run, link), variant, run))
            .collect()
    });
    let mut runs = Vec::with_capacity(cfg.runs);
    let mut failures = Vec::new();
    for (run, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => runs.push(r),
            Err(e) => failures.push(RunFailure::from_error(run, &e)),
        }
    }
    let report = summarize(cfg, link, variant, &runs, failures);
    Ok(MonteCarloOutput { report, runs })
}

pub fn run_monte_carlo(cfg: &ScenarioConfig, variant: FilterVariant, workers: usize) -> Result<MonteCarloOutput> {
    run_monte_carlo_with(cfg, &cfg.link, variant, workers)
}
