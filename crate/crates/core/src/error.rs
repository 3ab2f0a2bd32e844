use crate::trace::Trace;

/// Errors produced by geometry kernels, problems and solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("tangent vectors live at different base points")]
    BasePointMismatch,

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid manifold point: {0}")]
    InvalidPoint(String),

    #[error("invalid tangent vector: {0}")]
    InvalidTangent(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("point outside the injectivity region: {0}")]
    OutOfInjectivityRadius(String),

    #[error("least-squares block of column {column} is rank deficient ({observed} observed rows, rank {rank})")]
    LeastSquaresSingular {
        column: usize,
        observed: usize,
        rank: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("divergence at epoch {epoch}, step {step}: {reason}")]
    Divergence {
        epoch: usize,
        step: usize,
        reason: String,
        /// Trace recorded up to the last finite iterate.
        trace: Box<Trace>,
    },

    #[error("Armijo backtracking failed after {halvings} halvings")]
    LineSearch { halvings: usize },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("eigen-gap {gap:.3e} too small for a unique dominant subspace")]
    DegenerateSpectrum { gap: f64 },

    #[error("dataset format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_shape(expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
