//! Shared numerical primitives.

mod linalg;
mod normal;
mod perron;
mod rng;
mod sampling;

pub use linalg::{
    asymmetry, default_jitter, eigen_extremes, matrix_sqrt_psd, symmetrize, Matrix, Vector,
    DEFAULT_RELATIVE_JITTER,
};
pub(crate) use linalg::cholesky;
pub use normal::{std_normal_cdf, std_normal_central, std_normal_pdf, std_normal_sf};
pub use perron::{pf_left_eigenvector, support_is_primitive, PerronVector, PF_MAX_ITERATIONS, PF_TOLERANCE};
pub use rng::{Purpose, RngStream, StreamId, NONE};
pub use sampling::{
    rayleigh_from_uniform, sample_rayleigh, sample_truncated_normal,
    truncated_normal_from_uniform, truncated_normal_second_moment,
    truncated_normal_second_moment_closed_form,
};
