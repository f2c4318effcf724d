use thiserror::Error;

/// Errors raised while constructing problems or running the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected:?}, got {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is empty")]
    Empty,

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("eigenvalues are not simple (smallest gap {gap:e})")]
    RepeatedEigenvalues { gap: f64 },

    #[error(
        "Jacobi eigensolver did not converge in {sweeps} sweeps (off-diagonal norm {off_norm:e})"
    )]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("iterate is not of full rank (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("point is not a zero of the vector field (residual {residual:e})")]
    NotAZero { residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
