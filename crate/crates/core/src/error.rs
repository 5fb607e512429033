use thiserror::Error;

/// Errors raised across the estimation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("eigenvalue iteration did not converge for dimension {dim} after {iterations} sweeps")]
    NoConvergence { dim: usize, iterations: usize },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("operation requires {expected} mode")]
    WrongMode { expected: &'static str },

    #[error("{what} = {value} is outside its valid range")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("circuit probability {value} is outside [0, 1]; the noise channel is not physical")]
    NonPhysicalProbability { value: f64 },

    #[error("|t_2n| = {t2n:e} is below the division guard {guard:e}")]
    DivisionGuard { t2n: f64, guard: f64 },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("not enough usable depths for the decay fit (need 2, have {usable})")]
    InsufficientDepths { usable: usize },

    #[error("every iteration failed: {0}")]
    AllIterationsFailed(String),

    #[error("eigenpair matching is ambiguous (best overlap {overlap:.3})")]
    AmbiguousMatch { overlap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
