use crate::dynamics::{range_measurement, SensorNode, TargetState};
use crate::error::{Error, Result};
use crate::numerics::{cholesky, matrix_sqrt_psd, symmetrize, Matrix, Vector};

use super::NodeEstimate;

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet {
    pub points: Vec<Vector>,
    pub weights: Vec<f64>,
    pub kappa: f64,
}

impl SigmaPointSet {
    pub fn weighted_mean(&self) -> Vector {
        let mut acc = Vector::zeros(self.points[0].len());
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc.axpy(*w, p, 1.0);
        }
        acc
    }
}

/// `w₀ = κ/(n+κ)`, `w_s = 1/(2(n+κ))` for `s = 1..2n`.
pub fn sigma_weights(n: usize, kappa: f64) -> Result<Vec<f64>> {
    let scale = n as f64 + kappa;
    if !(scale > 0.0) {
        return Err(Error::InvalidScaling(scale));
    }
    let mut w = vec![1.0 / (2.0 * scale); 2 * n + 1];
    w[0] = kappa / scale;
    Ok(w)
}

/// Mean plus/minus the columns of `sqrt((n+κ) P)`.
pub fn sample_sigma_points(est: &NodeEstimate, kappa: f64, jitter: f64) -> Result<SigmaPointSet> {
    let n = est.dim();
    let weights = sigma_weights(n, kappa)?;
    let root = matrix_sqrt_psd(&(&est.p * (n as f64 + kappa)), jitter)?;
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(est.x.clone());
    for s in 0..n {
        points.push(&est.x + root.column(s));
    }
    for s in 0..n {
        points.push(&est.x - root.column(s));
    }
    Ok(SigmaPointSet {
        points,
        weights,
        kappa,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub x: Vector,
    pub p: Matrix,
    pub points: SigmaPointSet,
}

/// Sigma-point time update through the linear map `f`.
pub fn predict(est: &NodeEstimate, f: &Matrix, q: &Matrix, kappa: f64, jitter: f64, resym: bool) -> Result<Prediction> {
    let mut sp = sample_sigma_points(est, kappa, jitter)?;
    for p in sp.points.iter_mut() {
        *p = f * &*p;
    }
    let x = sp.weighted_mean();
    let mut p = q.clone();
    for (pt, w) in sp.points.iter().zip(&sp.weights) {
        let d = pt - &x;
        p.ger(*w, &d, &d, 1.0);
    }
    let p = if resym { symmetrize(&p) } else { p };
    Ok(Prediction { x, p, points: sp })
}

/// `ξ_s = ϑ̂ h(𝒳_s)`, `ẑ = Σ w_s ξ_s` for an arbitrary measurement map.
pub fn predict_measurement_with(
    points: &SigmaPointSet,
    h: impl Fn(&Vector) -> Vector,
    theta_hat: f64,
) -> (Vector, Vec<Vector>) {
    let xi: Vec<Vector> = points.points.iter().map(|p| h(p) * theta_hat).collect();
    let mut z = Vector::zeros(xi[0].len());
    for (x, w) in xi.iter().zip(&points.weights) {
        z.axpy(*w, x, 1.0);
    }
    (z, xi)
}

/// Range-sensor specialization of [`predict_measurement_with`].
pub fn predict_measurement(points: &SigmaPointSet, node: &SensorNode, theta_hat: f64) -> (Vector, Vec<Vector>) {
    predict_measurement_with(
        points,
        |x| Vector::from_element(1, range_measurement(&TargetState::from_dvector(x), node)),
        theta_hat,
    )
}

/// `(P_zz, P_xz)` from the propagated and measurement sigma points.
pub fn innovation_covariances(
    points: &SigmaPointSet,
    xi: &[Vector],
    x_pred: &Vector,
    z_hat: &Vector,
    r_nu: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let n = x_pred.len();
    let m = z_hat.len();
    let mut p_zz = r_nu.clone();
    let mut p_xz = Matrix::zeros(n, m);
    for ((pt, z), w) in points.points.iter().zip(xi).zip(&points.weights) {
        let dz = z - z_hat;
        let dx = pt - x_pred;
        p_zz.ger(*w, &dz, &dz, 1.0);
        p_xz.ger(*w, &dx, &dz, 1.0);
    }
    let p_zz = symmetrize(&p_zz);
    // variance at rounding level of the measurement itself counts as zero
    let floor = (f64::EPSILON * (1.0 + z_hat.amax())).powi(2);
    match cholesky(&p_zz) {
        Some(l) if l.l_dirty().diagonal().iter().all(|d| d * d > floor) => Ok((p_zz, p_xz)),
        _ => Err(Error::SingularInnovation),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Purpose, RngStream, StreamId};

    fn scalar(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    #[test]
    fn weights() {
        let w = sigma_weights(6, 0.0).unwrap();
        assert_eq!(w[0], 0.0);
        assert!(w[1..].iter().all(|&x| x == 1.0 / 12.0));
        let w = sigma_weights(1, 2.0).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 1.0 / 6.0).abs() < 1e-15 && w[1] == w[2]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(sigma_weights(3, -3.0), Err(Error::InvalidScaling(_))));
    }

    #[test]
    fn scalar_points() {
        let est = NodeEstimate::new(scalar(0.0), Matrix::identity(1, 1));
        let sp = sample_sigma_points(&est, 2.0, 0.0).unwrap();
        let r3 = 3f64.sqrt();
        assert_eq!(sp.points[0][0], 0.0);
        assert!((sp.points[1][0] - r3).abs() < 1e-15);
        assert!((sp.points[2][0] + r3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_spread_collapses() {
        let est = NodeEstimate::new(Vector::from_vec(vec![1.0, 2.0]), Matrix::zeros(2, 2));
        let sp = sample_sigma_points(&est, 0.0, 1e-18).unwrap();
        for p in &sp.points {
            assert!((p - &est.x).amax() < 1e-6);
        }
    }

    #[test]
    fn weighted_reconstruction() {
        let mut rng = RngStream::new(2, StreamId::new(Purpose::Auxiliary));
        let a = Matrix::from_fn(6, 6, |_, _| rng.standard_normal());
        let p = &a * a.transpose() + Matrix::identity(6, 6);
        let x = Vector::from_fn(6, |_, _| rng.standard_normal());
        let sp = sample_sigma_points(&NodeEstimate::new(x.clone(), p.clone()), 0.0, 0.0).unwrap();
        assert!((sp.weighted_mean() - &x).amax() < 1e-12);
        let mut cov = Matrix::zeros(6, 6);
        for (pt, w) in sp.points.iter().zip(&sp.weights) {
            let d = pt - &x;
            cov += &d * d.transpose() * *w;
        }
        assert!((cov - p).amax() < 1e-9);
    }

    #[test]
    fn identity_dynamics_keeps_estimate() {
        let p = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let est = NodeEstimate::new(Vector::from_vec(vec![1.0, -1.0]), p.clone());
        let pr = predict(&est, &Matrix::identity(2, 2), &Matrix::zeros(2, 2), 0.0, 0.0, true).unwrap();
        assert!((pr.x - &est.x).amax() < 1e-12);
        assert!((pr.p - p).amax() < 1e-12);
    }

    #[test]
    fn process_noise_dominates_zero_prior() {
        let est = NodeEstimate::new(Vector::zeros(2), Matrix::zeros(2, 2));
        let q = Matrix::identity(2, 2) * 3.0;
        let f = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let pr = predict(&est, &f, &q, 0.0, 1e-20, true).unwrap();
        assert!((pr.p - q).amax() < 1e-9);
    }

    #[test]
    fn zero_spread_measurement() {
        let sp = SigmaPointSet {
            points: vec![scalar(2.0); 3],
            weights: sigma_weights(1, 2.0).unwrap(),
            kappa: 2.0,
        };
        let (z, _) = predict_measurement_with(&sp, |x| x.map(|v| v * v), 0.7);
        assert!((z[0] - 0.7 * 4.0).abs() < 1e-15);
        let node = SensorNode { id: 1, position: [0.0; 3], meas_noise_var: 1.0, additive_noise_var: 0.0 };
        let at = Vector::from_vec(vec![3.0, 0.0, 4.0, 0.0, 0.0, 0.0]);
        let sp6 = SigmaPointSet {
            points: vec![at; 13],
            weights: sigma_weights(6, 0.0).unwrap(),
            kappa: 0.0,
        };
        let (z, _) = predict_measurement(&sp6, &node, 1.0);
        assert!((z[0] - 5.0).abs() < 1e-12);
        let (z, xi) = predict_measurement_with(&sp, |x| x.map(|v| v * v), 0.7);
        let r = Matrix::from_element(1, 1, 2.5);
        let (pzz, pxz) = innovation_covariances(&sp, &xi, &scalar(2.0), &z, &r).unwrap();
        assert!((pzz[(0, 0)] - 2.5).abs() < 1e-12);
        assert_eq!(pxz[(0, 0)], 0.0);
    }

    #[test]
    fn scalar_toy_measurement_and_innovation() {
        let est = NodeEstimate::new(scalar(0.0), Matrix::identity(1, 1));
        let sp = sample_sigma_points(&est, 2.0, 0.0).unwrap();
        let (z, xi) = predict_measurement_with(&sp, |x| x.map(|v| v * v), 1.3);
        assert!((z[0] - 1.3).abs() < 1e-14);
        let (z1, xi1) = predict_measurement_with(&sp, |x| x.map(|v| v * v), 1.0);
        assert!((z1[0] - 1.0).abs() < 1e-14);
        let (pzz, _) = innovation_covariances(&sp, &xi1, &scalar(0.0), &z1, &Matrix::identity(1, 1)).unwrap();
        assert!((pzz[(0, 0)] - 3.0).abs() < 1e-12);
        assert_eq!(xi.len(), 3);
    }

    #[test]
    fn linear_cross_covariance() {
        let mut rng = RngStream::new(8, StreamId::new(Purpose::Auxiliary));
        let a = Matrix::from_fn(4, 4, |_, _| rng.standard_normal());
        let p = &a * a.transpose() + Matrix::identity(4, 4);
        let h = Matrix::from_fn(2, 4, |_, _| rng.standard_normal());
        let x = Vector::from_fn(4, |_, _| rng.standard_normal());
        let sp = sample_sigma_points(&NodeEstimate::new(x.clone(), p.clone()), 0.0, 0.0).unwrap();
        let (z, xi) = predict_measurement_with(&sp, |v| &h * v, 1.0);
        let (pzz, pxz) = innovation_covariances(&sp, &xi, &x, &z, &Matrix::identity(2, 2)).unwrap();
        assert!((pxz - &p * h.transpose()).amax() < 1e-9);
        assert!((pzz - (&h * &p * h.transpose() + Matrix::identity(2, 2))).amax() < 1e-9);
    }

    #[test]
    fn singular_innovation_detected() {
        let sp = SigmaPointSet {
            points: vec![scalar(1.0); 3],
            weights: sigma_weights(1, 2.0).unwrap(),
            kappa: 2.0,
        };
        let (z, xi) = predict_measurement_with(&sp, |x| x.clone(), 1.0);
        let r = Matrix::zeros(1, 1);
        assert_eq!(
            innovation_covariances(&sp, &xi, &scalar(1.0), &z, &r),
            Err(Error::SingularInnovation)
        );
    }
}
