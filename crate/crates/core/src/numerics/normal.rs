use statrs::function::erf::{erf, erfc};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate far into the tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `Φ(x) - 1/2` without cancellation near zero.
pub fn std_normal_central(x: f64) -> f64 {
    0.5 * erf(x * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_at_zero() {
        assert!((std_normal_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        // Simpson quadrature of the pdf over [0, 1.96], 2e5 panels
        let n = 200_000;
        let h = 1.96 / n as f64;
        let mut acc = std_normal_pdf(0.0) + std_normal_pdf(1.96);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * std_normal_pdf(i as f64 * h);
        }
        let oracle = 0.5 + acc * h / 3.0;
        assert!((std_normal_cdf(1.96) - oracle).abs() < 1e-11);
        assert!((std_normal_cdf(1.96) - 0.9750021).abs() < 1e-7);
    }

    #[test]
    fn cdf_symmetry() {
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            assert!((std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))).abs() <= 1e-15, "x = {x}");
        }
    }

    #[test]
    fn derivative_of_cdf_matches_pdf() {
        let h = 1e-5;
        for i in -50..=50 {
            let x = i as f64 * 0.1;
            let d = (std_normal_cdf(x + h) - std_normal_cdf(x - h)) / (2.0 * h);
            assert!((d - std_normal_pdf(x)).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn tail_and_central_forms_agree() {
        for x in [0.0, 0.3, 1.0, 2.5] {
            assert!((std_normal_sf(x) - (1.0 - std_normal_cdf(x))).abs() < 1e-15);
            assert!((std_normal_central(x) - (std_normal_cdf(x) - 0.5)).abs() < 1e-15);
        }
    }
}
