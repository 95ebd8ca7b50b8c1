//! Target motion (constant turn in the horizontal plane, constant velocity in
//! depth) and the range-only sensor.

use nalgebra::{Matrix2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::numerics::{matrix_sqrt_psd, Matrix, RngStream, Vector};

/// Target state packed as `[x, ẋ, y, ẏ, z, ż]` (m, m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState(pub Vector6<f64>);

impl TargetState {
    pub const DIM: usize = 6;

    pub fn new(v: [f64; 6]) -> Self {
        Self(Vector6::from(v))
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[2], self.0[4])
    }

    pub fn velocity(&self) -> Vector3<f64> {
        Vector3::new(self.0[1], self.0[3], self.0[5])
    }

    pub fn to_dvector(&self) -> Vector {
        Vector::from_column_slice(self.0.as_slice())
    }

    pub fn from_dvector(v: &Vector) -> Self {
        assert_eq!(v.len(), Self::DIM);
        Self(Vector6::from_column_slice(v.as_slice()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// ω, rad/s.
    pub turn_rate: f64,
    /// T, s.
    pub period: f64,
    /// η².
    pub noise_intensity: f64,
}

impl MotionParams {
    pub fn new(turn_rate: f64, period: f64, noise_intensity: f64) -> Self {
        Self {
            turn_rate,
            period,
            noise_intensity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorNode {
    /// 1-based node index.
    pub id: usize,
    pub position: [f64; 3],
    /// Measurement noise variance R_v, m².
    pub meas_noise_var: f64,
    /// Additional (e.g. quantization) noise variance R_n, m².
    pub additive_noise_var: f64,
}

impl SensorNode {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

/// Below this |ωT| the turn block uses its Taylor expansion.
const SMALL_TURN: f64 = 1e-8;

// (sin(ωT)/ω, (1 - cos(ωT))/ω, cos(ωT), sin(ωT))
fn turn_terms(omega: f64, t: f64) -> (f64, f64, f64, f64) {
    let wt = omega * t;
    if wt.abs() < SMALL_TURN {
        let wt2 = wt * wt;
        let s_over_w = t * (1.0 - wt2 / 6.0 + wt2 * wt2 / 120.0);
        let c_over_w = omega * t * t * (0.5 - wt2 / 24.0);
        let cos = 1.0 - wt2 / 2.0 + wt2 * wt2 / 24.0;
        let sin = wt * (1.0 - wt2 / 6.0);
        (s_over_w, c_over_w, cos, sin)
    } else {
        let (sin, cos) = wt.sin_cos();
        (sin / omega, (1.0 - cos) / omega, cos, sin)
    }
}

pub fn transition_matrix(params: &MotionParams) -> Matrix {
    let t = params.period;
    let (s_w, c_w, cos, sin) = turn_terms(params.turn_rate, t);
    #[rustfmt::skip]
    let f = Matrix::from_row_slice(6, 6, &[
        1.0, s_w, 0.0, -c_w, 0.0, 0.0,
        0.0, cos, 0.0, -sin, 0.0, 0.0,
        0.0, c_w, 1.0, s_w,  0.0, 0.0,
        0.0, sin, 0.0, cos,  0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,  1.0, t,
        0.0, 0.0, 0.0, 0.0,  0.0, 1.0,
    ]);
    f
}

/// The per-axis block `η² [[T³/3, T²/2], [T²/2, T]]`.
pub fn axis_noise_block(params: &MotionParams) -> Matrix2<f64> {
    let t = params.period;
    params.noise_intensity * Matrix2::new(t.powi(3) / 3.0, t * t / 2.0, t * t / 2.0, t)
}

pub fn process_noise_cov(params: &MotionParams) -> Matrix {
    let block = axis_noise_block(params);
    let mut q = Matrix::zeros(6, 6);
    for axis in 0..3 {
        q.fixed_view_mut::<2, 2>(2 * axis, 2 * axis).copy_from(&block);
    }
    q
}

/// `F x + w`, `w ~ N(0, Q)`.
pub fn propagate_truth(x: &TargetState, params: &MotionParams, rng: &mut RngStream) -> TargetState {
    let f = transition_matrix(params);
    let mut next = &f * x.to_dvector();
    if params.noise_intensity > 0.0 {
        let l = matrix_sqrt_psd(&process_noise_cov(params), 0.0)
            .expect("process noise covariance is positive definite");
        let xi = Vector::from_fn(6, |_, _| rng.standard_normal());
        next += l * xi;
    }
    TargetState::from_dvector(&next)
}

pub fn range_measurement(x: &TargetState, node: &SensorNode) -> f64 {
    (x.position() - node.position()).norm()
}

/// Range plus `N(0, R_v)` noise.
pub fn ideal_measurement(x: &TargetState, node: &SensorNode, rng: &mut RngStream) -> f64 {
    range_measurement(x, node) + node.meas_noise_var.sqrt() * rng.standard_normal()
}

/// Uniform placement over `[0, Lx] × [0, Ly] × [-Lz, 0]`.
pub fn place_in_box(count: usize, origin_m: [f64; 3], extent_m: [f64; 3], rng: &mut RngStream) -> Vec<[f64; 3]> {
    (0..count)
        .map(|_| std::array::from_fn(|d| origin_m[d] + rng.uniform() * extent_m[d]))
        .collect()
}
