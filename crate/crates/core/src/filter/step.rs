use crate::channel::{apply_fading_scalar, fading_noise_cov, sample_fading, sample_link, ChannelParams, FadingParams, LinkModel};
use crate::dynamics::{ideal_measurement, range_measurement, SensorNode, TargetState};
use crate::error::Result;
use crate::network::{check_primitivity, metropolis_weights, DiffusionMatrix, Graph};
use crate::numerics::{asymmetry, eigen_extremes, Matrix, Purpose, RngStream, StreamId, Vector};

use super::fusion::{diffuse_with, information_pair, local_fuse_with, InformationPair};
use super::ukf::{innovation_covariances, predict, predict_measurement};
use super::{FilterOptions, FilterVariant, NodeEstimate};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeModel {
    pub sensor: SensorNode,
    pub fading: FadingParams,
}

/// Everything a network step needs besides the current estimates.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub graph: Graph,
    pub nodes: Vec<NodeModel>,
    pub transition: Matrix,
    pub process_noise: Matrix,
    pub channel: ChannelParams,
    pub links: LinkModel,
    pub options: FilterOptions,
    /// Keep each step's diffusion matrix in the telemetry.
    pub record_diffusion: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepContext {
    pub master_seed: u64,
    pub run: usize,
    /// 1-based time index of the step being computed.
    pub step: usize,
}

impl StepContext {
    fn stream(&self, purpose: Purpose, node: usize) -> RngStream {
        RngStream::new(self.master_seed, StreamId::new(purpose).run(self.run).step(self.step).node(node))
    }

    fn link_stream(&self, purpose: Purpose, from: usize, to: usize) -> RngStream {
        RngStream::new(self.master_seed, StreamId::new(purpose).run(self.run).step(self.step).link(from, to))
    }
}

/// Attempted transmissions and the power they used.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkTally {
    pub transmissions: u64,
    pub power_sum_w: f64,
}

impl LinkTally {
    pub fn add(&mut self, other: &LinkTally) {
        self.transmissions += other.transmissions;
        self.power_sum_w += other.power_sum_w;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTelemetry {
    /// Per node, smallest eigenvalue of the global covariance.
    pub eig_min: Vec<f64>,
    pub eig_max: Vec<f64>,
    /// Directed non-self links in the topology.
    pub links: usize,
    pub info_delivered: usize,
    pub diffusion_delivered: usize,
    pub tally: LinkTally,
    pub primitive: bool,
    pub max_asymmetry: f64,
    pub diffusion: Option<DiffusionMatrix>,
}

struct NodeObservation {
    z: f64,
    theta: f64,
    theta_hat: f64,
}

fn observe(model: &NodeModel, truth: &TargetState, ctx: &StepContext, node: usize) -> NodeObservation {
    let mut theta_rng = ctx.stream(Purpose::FadingCoefficient, node);
    let mut eps_rng = ctx.stream(Purpose::EstimationError, node);
    let fs = sample_fading(&model.fading, &mut theta_rng, &mut eps_rng);
    let y = ideal_measurement(truth, &model.sensor, &mut ctx.stream(Purpose::MeasurementNoise, node));
    let z = apply_fading_scalar(y, &fs, model.sensor.additive_noise_var, &mut ctx.stream(Purpose::AdditiveNoise, node));
    NodeObservation {
        z,
        theta: fs.theta,
        theta_hat: fs.theta_hat,
    }
}

struct LocalPrediction {
    x: Vector,
    p: Matrix,
    pair: InformationPair,
}

fn predict_and_encode(
    net: &NetworkModel,
    est: &NodeEstimate,
    node: &NodeModel,
    obs: &NodeObservation,
    variant: FilterVariant,
) -> Result<LocalPrediction> {
    let opts = &net.options;
    let pred = predict(est, &net.transition, &net.process_noise, opts.kappa, opts.jitter, opts.resymmetrize)?;
    let sensor = &node.sensor;
    let r_v = Matrix::from_element(1, 1, sensor.meas_noise_var);
    let r_n = Matrix::from_element(1, 1, sensor.additive_noise_var);
    let two_var = 2.0 * node.fading.sigma_theta * node.fading.sigma_theta;
    let (theta_used, r_nu) = match variant {
        FilterVariant::Fc => {
            let h = Vector::from_element(1, range_measurement(&TargetState::from_dvector(&pred.x), sensor));
            (obs.theta_hat, fading_noise_cov(&node.fading, &r_v, &r_n, &h))
        }
        FilterVariant::EFc => (obs.theta, &r_v * two_var + &r_n),
        FilterVariant::NFc => (1.0, &r_v + &r_n),
    };
    let (z_hat, xi) = predict_measurement(&pred.points, sensor, theta_used);
    let (p_zz, p_xz) = innovation_covariances(&pred.points, &xi, &pred.x, &z_hat, &r_nu)?;
    let z = Vector::from_element(1, obs.z);
    let pair = information_pair(&pred.p, &p_xz, &p_zz, &z, &z_hat)?;
    Ok(LocalPrediction {
        x: pred.x,
        p: pred.p,
        pair,
    })
}

/// One time step of the whole network: prediction, measurement encoding,
/// lossy exchange of information pairs, local fusion, lossy exchange of local
/// estimates, and diffusion.
///
/// The measurement is always generated through the true fading channel; the
/// variant only decides what the filter believes about it.
pub fn step_network(
    net: &NetworkModel,
    estimates: &[NodeEstimate],
    truth: &TargetState,
    variant: FilterVariant,
    ctx: &StepContext,
) -> Result<(Vec<NodeEstimate>, StepTelemetry)> {
    let n = net.nodes.len();
    assert_eq!(estimates.len(), n);
    let opts = &net.options;

    let mut preds = Vec::with_capacity(n);
    for i in 0..n {
        let obs = observe(&net.nodes[i], truth, ctx, i);
        let lp = predict_and_encode(net, &estimates[i], &net.nodes[i], &obs, variant)
            .map_err(|e| e.at(ctx.run, ctx.step, i))?;
        preds.push(lp);
    }

    // delivered[j * n + i]: packet from j reached i
    let mut info_ok = vec![false; n * n];
    let mut diff_ok = vec![false; n * n];
    let mut tally = LinkTally::default();
    let mut links = 0;
    for i in 0..n {
        info_ok[i * n + i] = true;
        diff_ok[i * n + i] = true;
        for &j in net.graph.senders_to(i) {
            let (q, u) = net.links.draw(&net.channel, ctx.master_seed, ctx.run, ctx.step, j, i);
            info_ok[j * n + i] = sample_link(q, &mut ctx.link_stream(Purpose::InfoLink, j, i));
            diff_ok[j * n + i] = sample_link(q, &mut ctx.link_stream(Purpose::DiffusionLink, j, i));
            links += 1;
            tally.transmissions += 2;
            tally.power_sum_w += 2.0 * u;
        }
    }

    let mut locals = Vec::with_capacity(n);
    for i in 0..n {
        let pairs: Vec<(&InformationPair, bool)> = net
            .graph
            .in_neighbors(i)
            .into_iter()
            .map(|j| (&preds[j].pair, info_ok[j * n + i]))
            .collect();
        let local = local_fuse_with(&preds[i].x, &preds[i].p, &pairs, opts.resymmetrize)
            .map_err(|e| e.at(ctx.run, ctx.step, i))?;
        locals.push(local);
    }

    let c = metropolis_weights(&net.graph, |j, i| diff_ok[j * n + i]);
    let mut globals = Vec::with_capacity(n);
    let mut eig_min = Vec::with_capacity(n);
    let mut eig_max = Vec::with_capacity(n);
    let mut max_asymmetry: f64 = 0.0;
    for i in 0..n {
        let nb = net.graph.in_neighbors(i);
        let ests: Vec<&NodeEstimate> = nb.iter().map(|&j| &locals[j]).collect();
        let w: Vec<f64> = nb.iter().map(|&j| c.weight(i, j)).collect();
        let g = diffuse_with(&ests, &w, opts.resymmetrize);
        let (lo, hi) = eigen_extremes(&g.p);
        eig_min.push(lo);
        eig_max.push(hi);
        max_asymmetry = max_asymmetry.max(asymmetry(&g.p));
        globals.push(g);
    }

    let telemetry = StepTelemetry {
        eig_min,
        eig_max,
        links,
        info_delivered: (0..n).map(|i| net.graph.senders_to(i).iter().filter(|&&j| info_ok[j * n + i]).count()).sum(),
        diffusion_delivered: (0..n).map(|i| net.graph.senders_to(i).iter().filter(|&&j| diff_ok[j * n + i]).count()).sum(),
        tally,
        primitive: check_primitivity(&c),
        max_asymmetry,
        diffusion: net.record_diffusion.then_some(c),
    };
    Ok((globals, telemetry))
}
