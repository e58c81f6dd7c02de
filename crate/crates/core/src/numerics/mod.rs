//! Small numerical toolkit shared by the physics modules: 2×2 and dense
//! complex matrices, fixed-step RK4, Laguerre polynomials, periodic
//! interpolation and seeded Gaussian streams.

mod dense;
mod interp;
mod matrix2;
mod ode;
mod random;
mod special;

pub use dense::DenseMatrix;
pub use interp::{hermite_point, PeriodicSamples};
pub use matrix2::{
    dot_h, eig2, eig2_with_det, log2_allow_scalar, norm2, principal_log2, Eigen2, Mat2, Vec2,
};
pub use ode::{integrate_ode, rk4_step, OdeState, Trajectory};
pub use random::{gaussian_stream, GaussianStream, NoiseDraw};
pub use special::{laguerre, laguerre_functions, ln_factorial};

pub use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("integration diverged at t = {time}")]
    Divergence { time: f64 },
    #[error("degenerate spectrum: eigenvalue gap {gap:e} at matrix scale {scale:e}")]
    DegenerateSpectrum { gap: f64, scale: f64 },
    #[error("eigenvalue {eigenvalue} lies on the logarithm branch cut")]
    BranchCut { eigenvalue: C64 },
    #[error("matrix is singular")]
    Singular,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `i`
pub const I: C64 = C64::new(0.0, 1.0);
