//! The wireless medium: fading and its estimate, fluctuated measurements,
//! BFSK packet loss, the inflated noise covariance, and transmission energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    sample_rayleigh, sample_truncated_normal, std_normal_sf, truncated_normal_second_moment,
    Matrix, Purpose, RngStream, StreamId, Vector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    /// Rayleigh scale σ_ϑ.
    pub sigma_theta: f64,
    /// Scale σ_ε of the relative estimation error.
    pub sigma_eps: f64,
    /// Truncation bound Δ_ε in (0, 1).
    pub delta_eps: f64,
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_theta > 0.0) || !(self.sigma_eps > 0.0) {
            return Err(Error::Config("fading scales must be positive".into()));
        }
        if !(self.delta_eps > 0.0 && self.delta_eps < 1.0) {
            return Err(Error::Config(format!(
                "truncation bound {} outside (0, 1)",
                self.delta_eps
            )));
        }
        Ok(())
    }

    /// `E[ε²]` of the truncated estimation error.
    pub fn error_second_moment(&self) -> f64 {
        truncated_normal_second_moment(self.sigma_eps, self.delta_eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSample {
    pub theta: f64,
    pub eps: f64,
    pub theta_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Channel power gain, linear.
    pub gain: f64,
    /// Packet length, bits.
    pub packet_bits: u32,
    /// Bit rate, bits/s.
    pub bit_rate: f64,
    /// Boltzmann constant, J/K.
    pub boltzmann: f64,
    /// Temperature, K.
    pub temperature: f64,
}

impl ChannelParams {
    pub fn from_db(gain_db: f64, packet_bits: u32, bit_rate: f64, boltzmann: f64, temperature: f64) -> Self {
        Self {
            gain: db_to_linear(gain_db),
            packet_bits,
            bit_rate,
            boltzmann,
            temperature,
        }
    }

    /// Underwater acoustic link used in the reference experiments.
    pub fn reference() -> Self {
        Self::from_db(-150.0, 1000, 6000.0, 1.38e-23, 280.0)
    }

    /// Argument of the BER function for peak power `u` in watts.
    pub fn snr(&self, u: f64) -> f64 {
        u * self.gain / (self.bit_rate * self.boltzmann * self.temperature)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Indicators for one directed link in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkDraw {
    /// Information-pair round.
    pub gamma: bool,
    /// Diffusion round.
    pub gamma_plus: bool,
}

/// BFSK bit-error rate `Q(u g / (r k_B T))`.
pub fn ber_bfsk(u: f64, params: &ChannelParams) -> f64 {
    std_normal_sf(params.snr(u))
}

/// `(1 - ber)^l`, evaluated in the log domain.
pub fn packet_success_prob(ber: f64, bits: u32) -> f64 {
    if ber <= 0.0 {
        return 1.0;
    }
    if ber >= 1.0 {
        return 0.0;
    }
    (bits as f64 * (-ber).ln_1p()).exp()
}

pub fn success_prob_for_power(u: f64, params: &ChannelParams) -> f64 {
    packet_success_prob(ber_bfsk(u, params), params.packet_bits)
}

/// Peak power (W) at which a packet gets through with probability `q_target`.
pub fn power_for_target_prob(q_target: f64, params: &ChannelParams) -> Result<f64> {
    let q_at = |u: f64| success_prob_for_power(u, params);
    if !(q_target > 0.0 && q_target < 1.0) || q_target <= q_at(0.0) {
        return Err(Error::NoBracket { q_target });
    }
    // grow the bracket from the SNR = 1 point
    let mut hi = 1.0 / params.snr(1.0);
    let mut lo = 0.0;
    let mut grown = 0;
    while q_at(hi) < q_target {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 200 || !hi.is_finite() {
            return Err(Error::NoBracket { q_target });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_at(mid) < q_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draws the true fading coefficient and its estimate from two independent
/// streams.
pub fn sample_fading(params: &FadingParams, theta_rng: &mut RngStream, eps_rng: &mut RngStream) -> FadingSample {
    let theta = sample_rayleigh(params.sigma_theta, theta_rng);
    let eps = sample_truncated_normal(params.sigma_eps, params.delta_eps, eps_rng);
    FadingSample {
        theta,
        eps,
        theta_hat: (1.0 + eps) * theta,
    }
}

/// `z = ϑ y + n`, `n ~ N(0, R_n)`, using the true coefficient.
pub fn apply_fading(y: &Vector, fs: &FadingSample, r_n: &Matrix, rng: &mut RngStream) -> Vector {
    let mut z = y * fs.theta;
    if r_n.amax() > 0.0 {
        let l = crate::numerics::matrix_sqrt_psd(r_n, 0.0).expect("additive noise covariance is PSD");
        let xi = Vector::from_fn(y.len(), |_, _| rng.standard_normal());
        z += l * xi;
    }
    z
}

/// Scalar fast path of [`apply_fading`].
pub fn apply_fading_scalar(y: f64, fs: &FadingSample, r_n: f64, rng: &mut RngStream) -> f64 {
    let noise = if r_n > 0.0 { r_n.sqrt() * rng.standard_normal() } else { 0.0 };
    fs.theta * y + noise
}

/// `R_ν = 2σ_ϑ² E[ε²] h hᵀ + 2σ_ϑ² R_v + R_n`.
pub fn fading_noise_cov(fp: &FadingParams, r_v: &Matrix, r_n: &Matrix, h: &Vector) -> Matrix {
    let two_var = 2.0 * fp.sigma_theta * fp.sigma_theta;
    let delta_r = h * h.transpose() * (two_var * fp.error_second_moment());
    delta_r + r_v * two_var + r_n
}

pub fn sample_link(q: f64, rng: &mut RngStream) -> bool {
    if q >= 1.0 {
        return true;
    }
    if q <= 0.0 {
        return false;
    }
    rng.bernoulli(q)
}

/// `E = u l / r`, joules.
pub fn transmission_energy(u: f64, bits: u32, bit_rate: f64) -> f64 {
    u * bits as f64 / bit_rate
}

/// How each directed link's delivery probability and transmit power are set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkModel {
    /// Fixed success probability; `nominal_power_w` is only used for energy.
    Probability { q: f64, nominal_power_w: Option<f64> },
    /// Probability drawn uniformly per directed link per step.
    ProbabilityRange { min: f64, max: f64, nominal_power_w: Option<f64> },
    /// Fixed peak power mapped through the BER model.
    Power { power_w: f64 },
    /// Peak power drawn uniformly per directed link per step.
    PowerRange { min_w: f64, max_w: f64 },
}

impl LinkModel {
    /// `(q, u)` for the link `from → to` at `step` of `run`.
    pub fn draw(&self, channel: &ChannelParams, master_seed: u64, run: usize, step: usize, from: usize, to: usize) -> (f64, f64) {
        let uniform = |purpose| {
            let id = StreamId::new(purpose).run(run).step(step).link(from, to);
            RngStream::new(master_seed, id).uniform()
        };
        match *self {
            LinkModel::Probability { q, nominal_power_w } => (q, nominal_power_w.unwrap_or(0.0)),
            LinkModel::ProbabilityRange { min, max, nominal_power_w } => {
                (min + (max - min) * uniform(Purpose::LinkQuality), nominal_power_w.unwrap_or(0.0))
            }
            LinkModel::Power { power_w } => (success_prob_for_power(power_w, channel), power_w),
            LinkModel::PowerRange { min_w, max_w } => {
                let u = min_w + (max_w - min_w) * uniform(Purpose::LinkPower);
                (success_prob_for_power(u, channel), u)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn aux(seed: u64) -> RngStream {
        RngStream::new(seed, StreamId::new(Purpose::Auxiliary))
    }

    #[test]
    fn reference_gain_is_linear() {
        assert!((ChannelParams::reference().gain - 1e-15).abs() < 1e-29);
    }

    #[test]
    fn ber_values() {
        let p = ChannelParams::reference();
        assert_eq!(ber_bfsk(0.0, &p), 0.5);
        let arg = 0.14 * 1e-15 / (6000.0 * 1.38e-23 * 280.0);
        assert!((p.snr(0.14) - arg).abs() < 1e-12);
        assert!((arg - 6.039).abs() < 1e-3);
        let ber = ber_bfsk(0.14, &p);
        assert!((ber - 7.8e-10).abs() < 0.1e-10, "{ber}");
        assert!(ber_bfsk(0.2, &p) < ber_bfsk(0.1, &p));
    }

    #[test]
    fn success_probability_edges() {
        assert_eq!(packet_success_prob(0.0, 1000), 1.0);
        assert_eq!(packet_success_prob(1.0, 1000), 0.0);
        let ber = 1.0 - 0.5f64.powf(1.0 / 1000.0);
        assert!((packet_success_prob(ber, 1000) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn power_inverse_round_trip() {
        let p = ChannelParams::reference();
        let u = power_for_target_prob(0.5, &p).unwrap();
        assert!((success_prob_for_power(u, &p) - 0.5).abs() < 1e-9);
        let target_ber = 1.0 - 0.5f64.powf(0.001);
        assert!(((ber_bfsk(u, &p) - target_ber) / target_ber).abs() < 1e-6);
        let lo = power_for_target_prob(0.3, &p).unwrap();
        let hi = power_for_target_prob(0.7, &p).unwrap();
        assert!(hi > lo);
        assert!(matches!(power_for_target_prob(0.0, &p), Err(Error::NoBracket { .. })));
        assert!(matches!(power_for_target_prob(1e-305, &p), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn vanishing_estimation_error() {
        let fp = FadingParams {
            sigma_theta: 0.5,
            sigma_eps: 1.0,
            delta_eps: 1e-9,
        };
        let (mut a, mut b) = (aux(1), aux(2));
        for _ in 0..1000 {
            let s = sample_fading(&fp, &mut a, &mut b);
            assert!((s.theta_hat / s.theta - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn fading_sample_statistics() {
        let fp = FadingParams {
            sigma_theta: 0.5,
            sigma_eps: 10f64.sqrt(),
            delta_eps: 0.1,
        };
        let (mut a, mut b) = (aux(3), aux(4));
        let n = 1_000_000;
        let mut sq = Vec::with_capacity(n);
        for _ in 0..n {
            let s = sample_fading(&fp, &mut a, &mut b);
            assert!(s.theta > 0.0 && s.theta_hat > 0.0);
            assert!((s.theta_hat / s.theta - 1.0).abs() <= 0.1 + 1e-12);
            assert_eq!(s.theta_hat, (1.0 + s.eps) * s.theta);
            sq.push(s.theta * s.theta);
        }
        let mean = sq.iter().sum::<f64>() / n as f64;
        let var = sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.5).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn fading_application() {
        let mut rng = aux(5);
        let y = Vector::from_vec(vec![100.0]);
        let zero = Matrix::zeros(1, 1);
        let unit = FadingSample { theta: 1.0, eps: 0.0, theta_hat: 1.0 };
        assert_eq!(apply_fading(&y, &unit, &zero, &mut rng), y);
        let half = FadingSample { theta: 0.5, eps: 0.0, theta_hat: 0.5 };
        assert_eq!(apply_fading(&y, &half, &zero, &mut rng)[0], 50.0);

        let one = Matrix::identity(1, 1);
        let n = 100_000;
        let d: Vec<f64> = (0..n).map(|_| apply_fading(&y, &half, &one, &mut rng)[0] - 50.0).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 3.0 * (2.0 / (n - 1) as f64).sqrt());
    }

    #[test]
    fn noise_covariance_assembly() {
        let fp = FadingParams { sigma_theta: 0.5, sigma_eps: 1.0, delta_eps: 0.1 };
        let rv = Matrix::from_element(1, 1, 10.0);
        let rn = Matrix::from_element(1, 1, 1.0);
        let r = fading_noise_cov(&fp, &rv, &rn, &Vector::zeros(1));
        assert!((r[(0, 0)] - 6.0).abs() < 1e-15);

        let tiny = FadingParams { sigma_eps: 1e-9, ..fp };
        let r = fading_noise_cov(&tiny, &rv, &rn, &Vector::from_vec(vec![1000.0]));
        assert!((r[(0, 0)] - 6.0).abs() < 1e-6);

        let r = fading_noise_cov(&fp, &rv, &rn, &Vector::from_vec(vec![1000.0]));
        let delta_r = r[(0, 0)] - 6.0;
        // 2 sigma_theta^2 E[eps^2] h^2 with E[eps^2] = 3.328891e-3
        assert!((delta_r - 0.5 * 3.328891e-3 * 1e6).abs() < 1e-2, "{delta_r}");
    }

    #[test]
    fn link_sampling() {
        let mut rng = aux(6);
        assert!(sample_link(1.0, &mut rng));
        assert!(!sample_link(0.0, &mut rng));
        let n = 1_000_000;
        let hits = (0..n).filter(|_| sample_link(0.3, &mut rng)).count();
        let mean = hits as f64 / n as f64;
        let se = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((mean - 0.3).abs() < 3.0 * se);
    }

    #[test]
    fn energy() {
        assert!((transmission_energy(0.14, 1000, 6000.0) - 0.023_333_333_333).abs() < 1e-9);
        assert_eq!(transmission_energy(0.0, 1000, 6000.0), 0.0);
        assert_eq!(transmission_energy(0.28, 1000, 6000.0), 2.0 * transmission_energy(0.14, 1000, 6000.0));
    }

    #[test]
    fn link_model_draws() {
        let p = ChannelParams::reference();
        let fixed = LinkModel::Probability { q: 0.5, nominal_power_w: Some(0.14) };
        assert_eq!(fixed.draw(&p, 1, 0, 0, 1, 2), (0.5, 0.14));
        let range = LinkModel::ProbabilityRange { min: 0.45, max: 0.55, nominal_power_w: None };
        let (q, u) = range.draw(&p, 1, 0, 3, 1, 2);
        assert!((0.45..0.55).contains(&q) && u == 0.0);
        assert_eq!(q, range.draw(&p, 1, 0, 3, 1, 2).0);
        assert_ne!(q, range.draw(&p, 1, 0, 3, 2, 1).0);
        let power = LinkModel::Power { power_w: 0.0 };
        let q0 = power.draw(&p, 1, 0, 0, 0, 1).0;
        assert!((q0 / 0.5f64.powi(1000) - 1.0).abs() < 1e-12);
        let pr = LinkModel::PowerRange { min_w: 0.135, max_w: 0.147 };
        let (_, u) = pr.draw(&p, 1, 0, 0, 0, 1);
        assert!((0.135..0.147).contains(&u));
    }

    proptest! {
        #[test]
        fn success_prob_monotone_in_power(a in 0.0f64..0.5, b in 0.0f64..0.5) {
            let p = ChannelParams::reference();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(success_prob_for_power(lo, &p) <= success_prob_for_power(hi, &p));
        }

        #[test]
        fn noise_cov_is_symmetric_psd(
            m in 1usize..=3,
            sigma_theta in 0.05f64..2.0,
            sigma_eps in 0.01f64..5.0,
            delta in 0.01f64..0.99,
            seed in any::<u64>(),
        ) {
            let fp = FadingParams { sigma_theta, sigma_eps, delta_eps: delta };
            let mut rng = aux(seed);
            let a = Matrix::from_fn(m, m, |_, _| rng.standard_normal());
            let rv = &a * a.transpose();
            let b = Matrix::from_fn(m, m, |_, _| rng.standard_normal());
            let rn = &b * b.transpose();
            let h = Vector::from_fn(m, |_, _| 100.0 * rng.standard_normal());
            let r = fading_noise_cov(&fp, &rv, &rn, &h);
            prop_assert!((&r - r.transpose()).amax() <= 1e-12 * r.amax());
            let eig = r.clone().symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&e| e >= -1e-9 * r.amax()));
        }
    }
}
