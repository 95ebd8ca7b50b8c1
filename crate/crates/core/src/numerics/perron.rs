use super::linalg::{Matrix, Vector};
use crate::error::{Error, Result};

pub const PF_MAX_ITERATIONS: usize = 100_000;
pub const PF_TOLERANCE: f64 = 1e-10;

/// Stationary row vector of a row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronVector {
    pub weights: Vector,
    /// Whether the support pattern is irreducible with a positive diagonal,
    /// i.e. the vector is unique.
    pub primitive: bool,
    pub iterations: usize,
}

/// Left Perron–Frobenius vector `c` with `cᵀ C = cᵀ`, by power iteration on
/// `Cᵀ` from the uniform vector.
pub fn pf_left_eigenvector(c: &Matrix) -> Result<PerronVector> {
    let n = c.nrows();
    assert!(c.is_square() && n > 0);
    let ct = c.transpose();
    let mut v = Vector::from_element(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for it in 0..=PF_MAX_ITERATIONS {
        let mut next = &ct * &v;
        let s = next.sum();
        next /= s;
        residual = (&next - &v).amax();
        if residual <= PF_TOLERANCE {
            // report the fixed-point residual of the returned vector
            let check = (&ct * &next - &next).amax();
            if check <= PF_TOLERANCE {
                return Ok(PerronVector {
                    weights: next,
                    primitive: support_is_primitive(c),
                    iterations: it + 1,
                });
            }
        }
        v = next;
    }
    Err(Error::NoConvergence {
        iterations: PF_MAX_ITERATIONS,
        residual,
    })
}

/// True iff `(C + I)^(N-1)` is entrywise positive on the support pattern and
/// the diagonal of `C` is positive.
pub fn support_is_primitive(c: &Matrix) -> bool {
    let n = c.nrows();
    if (0..n).any(|i| c[(i, i)] <= 0.0) {
        return false;
    }
    let base: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i == j || c[(i, j)] > 0.0).collect())
        .collect();
    let mut reach = base.clone();
    for _ in 1..n.saturating_sub(1) {
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for k in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        next[i][j] |= base[k][j];
                    }
                }
            }
        }
        if next == reach {
            break;
        }
        reach = next;
    }
    reach.iter().all(|row| row.iter().all(|&b| b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubly_stochastic_gives_uniform() {
        let c = Matrix::from_row_slice(3, 3, &[0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5]);
        let pf = pf_left_eigenvector(&c).unwrap();
        for w in pf.weights.iter() {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(pf.primitive);
    }

    #[test]
    fn two_by_two_hand_solution() {
        let c = Matrix::from_row_slice(2, 2, &[0.5, 0.5, 0.25, 0.75]);
        let pf = pf_left_eigenvector(&c).unwrap();
        assert!((pf.weights[0] - 1.0 / 3.0).abs() < 1e-10);
        assert!((pf.weights[1] - 2.0 / 3.0).abs() < 1e-10);
        let res = (c.transpose() * &pf.weights - &pf.weights).amax();
        assert!(res <= 1e-10);
    }

    #[test]
    fn identity_is_flagged_non_unique() {
        let pf = pf_left_eigenvector(&Matrix::identity(4, 4)).unwrap();
        assert!(!pf.primitive);
        assert!((pf.weights.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_patterns_are_not_primitive() {
        let c = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(pf_left_eigenvector(&c).is_ok());
        let cyc = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(!support_is_primitive(&cyc));
        let skew = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(!support_is_primitive(&skew));
    }
}
