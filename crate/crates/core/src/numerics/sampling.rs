use statrs::function::erf::erf_inv;
use std::f64::consts::SQRT_2;

use super::normal::{std_normal_central, std_normal_pdf};
use super::rng::RngStream;

/// Rayleigh inverse CDF: `sigma * sqrt(-2 ln(1 - u))`.
///
/// `sigma` is the scale, so `E[x²] = 2 sigma²`.
pub fn rayleigh_from_uniform(sigma: f64, u: f64) -> f64 {
    sigma * (-2.0 * (-u).ln_1p()).sqrt()
}

pub fn sample_rayleigh(sigma: f64, rng: &mut RngStream) -> f64 {
    debug_assert!(sigma > 0.0);
    rayleigh_from_uniform(sigma, rng.uniform_open())
}

/// Zero-mean normal with scale `sigma` conditioned on `[-delta, delta]`,
/// mapped from a uniform `u` in `(0, 1)` through the conditional quantile.
pub fn truncated_normal_from_uniform(sigma: f64, delta: f64, u: f64) -> f64 {
    let mass = 2.0 * std_normal_central(delta / sigma);
    let x = sigma * SQRT_2 * erf_inv((2.0 * u - 1.0) * mass);
    x.clamp(-delta, delta)
}

pub fn sample_truncated_normal(sigma: f64, delta: f64, rng: &mut RngStream) -> f64 {
    debug_assert!(sigma > 0.0 && delta > 0.0);
    truncated_normal_from_uniform(sigma, delta, rng.uniform_open())
}

/// `E[ε²]` for `ε ~ N(0, sigma²)` truncated to `[-delta, delta]`:
/// `sigma² (1 - a φ(a) / (Φ(a) - 1/2))` with `a = delta / sigma`.
///
/// For small `a` the closed form cancels badly, so a power series of the
/// truncated integrals is used instead.
pub fn truncated_normal_second_moment(sigma: f64, delta: f64) -> f64 {
    let a = delta / sigma;
    if a < 0.5 {
        delta * delta * small_ratio_series(a)
    } else {
        truncated_normal_second_moment_closed_form(sigma, delta)
    }
}

pub fn truncated_normal_second_moment_closed_form(sigma: f64, delta: f64) -> f64 {
    let a = delta / sigma;
    sigma * sigma * (1.0 - a * std_normal_pdf(a) / std_normal_central(a))
}

// E[x²] / a² for a standard normal truncated to [-a, a], via
//   ∫ x² e^{-x²/2} = Σ (-1/2)^k / k! · 2 a^{2k+3} / (2k+3)
//   ∫    e^{-x²/2} = Σ (-1/2)^k / k! · 2 a^{2k+1} / (2k+1)
fn small_ratio_series(a: f64) -> f64 {
    let t = -0.5 * a * a;
    let mut coeff = 1.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..40 {
        let kf = k as f64;
        if k > 0 {
            coeff *= t / kf;
        }
        let dn = coeff / (2.0 * kf + 3.0);
        num += dn;
        den += coeff / (2.0 * kf + 1.0);
        if dn.abs() < 1e-18 * num.abs() {
            break;
        }
    }
    num / den
}
