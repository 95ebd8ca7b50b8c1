use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const JITTER_RETRIES: u32 = 3;

/// Relative jitter used when the caller passes zero.
pub const DEFAULT_RELATIVE_JITTER: f64 = 1e-12;

/// Default jitter for `m`: `1e-12 * trace(m) / dim`.
pub fn default_jitter(m: &Matrix) -> f64 {
    let dim = m.nrows().max(1) as f64;
    let j = DEFAULT_RELATIVE_JITTER * m.trace() / dim;
    if j.is_finite() && j > 0.0 {
        j
    } else {
        DEFAULT_RELATIVE_JITTER
    }
}

/// Lower-triangular `L` with `L Lᵀ = m`.
///
/// Factorizes `m` directly; on failure retries with `m + j I`, starting at
/// `jitter` (or [`default_jitter`] when `jitter` is zero) and growing by ×10
/// for up to three attempts.
pub fn matrix_sqrt_psd(m: &Matrix, jitter: f64) -> Result<Matrix> {
    assert!(m.is_square() && m.nrows() > 0, "matrix_sqrt_psd needs a square, non-empty matrix");
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Ok(ch.unpack());
    }
    let mut j = if jitter > 0.0 { jitter } else { default_jitter(m) };
    let n = m.nrows();
    for attempt in 0..JITTER_RETRIES {
        if attempt > 0 {
            j *= 10.0;
        }
        let shifted = m + Matrix::identity(n, n) * j;
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok(ch.unpack());
        }
    }
    Err(Error::NotFactorizable {
        retries: JITTER_RETRIES,
        last_jitter: j,
    })
}

/// `(m + mᵀ) / 2`, exactly symmetric.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &Matrix) -> f64 {
    (m - m.transpose()).amax()
}

pub(crate) fn cholesky(m: &Matrix) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
}

/// Eigenvalue extremes `(min, max)` of a symmetric matrix.
pub fn eigen_extremes(m: &Matrix) -> (f64, f64) {
    let eig = m.clone().symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}
