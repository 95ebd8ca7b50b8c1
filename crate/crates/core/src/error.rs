use thiserror::Error;

/// Failures surfaced by the numerical and filtering layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix not factorizable after {retries} jitter retries (last jitter {last_jitter:e})")]
    NotFactorizable { retries: u32, last_jitter: f64 },

    #[error("power iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no power level reaches success probability {q_target}")]
    NoBracket { q_target: f64 },

    #[error("invalid sigma-point scaling: n + kappa = {0} must be positive")]
    InvalidScaling(f64),

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("equivalent measurement covariance is not positive definite")]
    SingularR,

    #[error("predicted covariance is not invertible")]
    SingularCovariance,

    #[error("inconsistent bound constants: lower bound {lower:e} exceeds upper bound {upper:e}")]
    InvalidBounds { lower: f64, upper: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("run {run}, step {step}, node {node}: {source}")]
    NodeStep {
        run: usize,
        step: usize,
        node: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at(self, run: usize, step: usize, node: usize) -> Self {
        Error::NodeStep {
            run,
            step,
            node,
            source: Box::new(self),
        }
    }
}
