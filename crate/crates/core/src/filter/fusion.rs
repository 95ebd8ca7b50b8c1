use crate::error::{Error, Result};
use crate::numerics::{cholesky, symmetrize, Matrix, Vector};

use super::NodeEstimate;

/// What a node broadcasts so neighbors can fuse its measurement:
/// `(ℋᵀℛ⁻¹ℋ, ℋᵀℛ⁻¹(z − ẑ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationPair {
    pub omega_mat: Matrix,
    pub omega_vec: Vector,
}

impl InformationPair {
    pub fn zero(n: usize) -> Self {
        Self {
            omega_mat: Matrix::zeros(n, n),
            omega_vec: Vector::zeros(n),
        }
    }
}

/// Information-form contribution of one measurement, with
/// `ℋ = P_xzᵀ P⁻¹` and `ℛ = P_zz − P_xzᵀ P⁻¹ P_xz`.
pub fn information_pair(p_pred: &Matrix, p_xz: &Matrix, p_zz: &Matrix, z: &Vector, z_hat: &Vector) -> Result<InformationPair> {
    let chol = cholesky(p_pred).ok_or(Error::SingularCovariance)?;
    // X = P⁻¹ P_xz = ℋᵀ
    let ht = chol.solve(p_xz);
    let r = symmetrize(&(p_zz - p_xz.transpose() * &ht));
    let r_chol = cholesky(&r).ok_or(Error::SingularR)?;
    // ℛ⁻¹ ℋ and ℛ⁻¹ (z − ẑ)
    let r_inv_h = r_chol.solve(&ht.transpose());
    let r_inv_nu = r_chol.solve(&(z - z_hat));
    Ok(InformationPair {
        omega_mat: symmetrize(&(&ht * r_inv_h)),
        omega_vec: &ht * r_inv_nu,
    })
}

/// Kalman gain form of the measurement update.
pub fn gain_form_update(x_pred: &Vector, p_pred: &Matrix, p_xz: &Matrix, p_zz: &Matrix, z: &Vector, z_hat: &Vector) -> Result<NodeEstimate> {
    let chol = cholesky(p_zz).ok_or(Error::SingularInnovation)?;
    // K = P_xz P_zz⁻¹, computed as (P_zz⁻¹ P_xzᵀ)ᵀ
    let k = chol.solve(&p_xz.transpose()).transpose();
    let x = x_pred + &k * (z - z_hat);
    let p = p_pred - &k * p_zz * k.transpose();
    Ok(NodeEstimate::new(x, symmetrize(&p)))
}

/// Information-form fusion of every pair whose indicator is set.
pub fn local_fuse(x_pred: &Vector, p_pred: &Matrix, pairs: &[(&InformationPair, bool)]) -> Result<NodeEstimate> {
    local_fuse_with(x_pred, p_pred, pairs, true)
}

pub fn local_fuse_with(x_pred: &Vector, p_pred: &Matrix, pairs: &[(&InformationPair, bool)], resym: bool) -> Result<NodeEstimate> {
    let n = x_pred.len();
    let chol = cholesky(p_pred).ok_or(Error::SingularCovariance)?;
    let mut info = chol.inverse();
    let mut info_vec = Vector::zeros(n);
    for (pair, delivered) in pairs {
        if *delivered {
            info += &pair.omega_mat;
            info_vec += &pair.omega_vec;
        }
    }
    if resym {
        info = symmetrize(&info);
    }
    let info_chol = cholesky(&info).ok_or(Error::SingularCovariance)?;
    let p = info_chol.inverse();
    let x = x_pred + info_chol.solve(&info_vec);
    let p = if resym { symmetrize(&p) } else { p };
    Ok(NodeEstimate::new(x, p))
}

/// Convex combination of neighbor estimates and covariances.
pub fn diffuse(locals: &[&NodeEstimate], weights: &[f64]) -> NodeEstimate {
    diffuse_with(locals, weights, true)
}

pub fn diffuse_with(locals: &[&NodeEstimate], weights: &[f64], resym: bool) -> NodeEstimate {
    assert_eq!(locals.len(), weights.len());
    let n = locals[0].dim();
    let mut x = Vector::zeros(n);
    let mut p = Matrix::zeros(n, n);
    for (est, &w) in locals.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        x.axpy(w, &est.x, 1.0);
        p += &est.p * w;
    }
    let p = if resym { symmetrize(&p) } else { p };
    NodeEstimate::new(x, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Purpose, RngStream, StreamId};

    fn s(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    fn v(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    fn random_joint(rng: &mut RngStream, n: usize, m: usize) -> (Matrix, Matrix, Matrix) {
        let a = Matrix::from_fn(n + m, n + m, |_, _| rng.standard_normal());
        let joint = &a * a.transpose() + Matrix::identity(n + m, n + m);
        let p = joint.view((0, 0), (n, n)).into_owned();
        let pxz = joint.view((0, n), (n, m)).into_owned();
        let pzz = joint.view((n, n), (m, m)).into_owned();
        (p, pxz, pzz)
    }

    #[test]
    fn scalar_gain_update() {
        let est = gain_form_update(&v(0.0), &s(2.0), &s(1.0), &s(2.0), &v(1.0), &v(0.0)).unwrap();
        assert!((est.x[0] - 0.5).abs() < 1e-15);
        assert!((est.p[(0, 0)] - 1.5).abs() < 1e-15);
        let still = gain_form_update(&v(3.0), &s(2.0), &s(1.0), &s(2.0), &v(0.0), &v(0.0)).unwrap();
        assert_eq!(still.x[0], 3.0);
        assert!(still.p[(0, 0)] < 2.0);
    }

    #[test]
    fn zero_innovation_and_zero_cross_covariance() {
        let mut rng = RngStream::new(1, StreamId::new(Purpose::Auxiliary));
        let (p, pxz, pzz) = random_joint(&mut rng, 3, 1);
        let z = v(4.0);
        let pair = information_pair(&p, &pxz, &pzz, &z, &z).unwrap();
        assert_eq!(pair.omega_vec.amax(), 0.0);
        let moved = information_pair(&p, &pxz, &pzz, &v(5.0), &z).unwrap();
        assert_eq!(pair.omega_mat, moved.omega_mat);

        let none = information_pair(&p, &Matrix::zeros(3, 1), &pzz, &v(5.0), &z).unwrap();
        assert_eq!(none.omega_mat.amax(), 0.0);
        assert_eq!(none.omega_vec.amax(), 0.0);
    }

    #[test]
    fn information_matches_gain_form() {
        let mut rng = RngStream::new(2, StreamId::new(Purpose::Auxiliary));
        for _ in 0..200 {
            let (p, pxz, pzz) = random_joint(&mut rng, 6, 1);
            let x = Vector::from_fn(6, |_, _| 10.0 * rng.standard_normal());
            let z = v(rng.standard_normal());
            let zh = v(rng.standard_normal());
            let pair = information_pair(&p, &pxz, &pzz, &z, &zh).unwrap();
            let fused = local_fuse(&x, &p, &[(&pair, true)]).unwrap();
            let gain = gain_form_update(&x, &p, &pxz, &pzz, &z, &zh).unwrap();
            assert!((&fused.x - &gain.x).norm() <= 1e-10 * gain.x.norm().max(1.0));
            assert!((&fused.p - &gain.p).norm() <= 1e-10 * gain.p.norm());
        }
    }

    #[test]
    fn nothing_received_keeps_prediction() {
        let p = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let x = Vector::from_vec(vec![1.0, 2.0]);
        let zero = InformationPair::zero(2);
        let other = InformationPair {
            omega_mat: Matrix::identity(2, 2),
            omega_vec: Vector::from_vec(vec![1.0, 1.0]),
        };
        let est = local_fuse(&x, &p, &[(&zero, true), (&other, false)]).unwrap();
        assert!((est.x - x).amax() < 1e-14);
        assert!((est.p - p).amax() < 1e-14);
    }

    #[test]
    fn information_is_additive() {
        let p = Matrix::identity(2, 2) * 4.0;
        let x = Vector::zeros(2);
        let pair = InformationPair {
            omega_mat: Matrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]),
            omega_vec: Vector::from_vec(vec![0.3, -0.1]),
        };
        let one = local_fuse(&x, &p, &[(&pair, true)]).unwrap();
        let two = local_fuse(&x, &p, &[(&pair, true), (&pair, true)]).unwrap();
        let prior_info = Matrix::identity(2, 2) * 0.25;
        let inc1 = one.p.clone().try_inverse().unwrap() - &prior_info;
        let inc2 = two.p.clone().try_inverse().unwrap() - &prior_info;
        assert!((inc2 - inc1 * 2.0).amax() < 1e-12);
    }

    #[test]
    fn singular_prediction() {
        let pair = InformationPair::zero(2);
        assert_eq!(
            local_fuse(&Vector::zeros(2), &Matrix::zeros(2, 2), &[(&pair, true)]),
            Err(Error::SingularCovariance)
        );
    }

    #[test]
    fn singular_equivalent_noise() {
        // P_zz equal to the explained part leaves ℛ = 0
        let p = s(1.0);
        let pxz = s(1.0);
        let pzz = s(1.0);
        assert_eq!(information_pair(&p, &pxz, &pzz, &v(0.0), &v(0.0)), Err(Error::SingularR));
    }

    #[test]
    fn diffusion_cases() {
        let a = NodeEstimate::new(v(0.0), s(1.0));
        let b = NodeEstimate::new(v(2.0), s(3.0));
        let d = diffuse(&[&a, &b], &[0.25, 0.75]);
        assert_eq!(d.x[0], 1.5);
        assert_eq!(d.p[(0, 0)], 2.5);
        assert_eq!(diffuse(&[&a, &b], &[1.0, 0.0]), a);
        assert_eq!(diffuse(&[&b, &b], &[0.5, 0.5]), b);
    }
}
