use thiserror::Error;

/// Failure modes split by who has to act: bad inputs (fix the call),
/// numerical trouble (inspect the run), or an internal check tripping.
#[derive(Debug, Error)]
pub enum Error {
    #[error("spectrum rejected: {0}")]
    InvalidSpectrum(String),

    #[error("shape rejected: {0}")]
    InvalidShape(String),

    #[error("{context}: dimension mismatch ({left} vs {right})")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("level grid rejected: {0}")]
    InvalidGrid(String),

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: u64, min: u64 },

    #[error("gradient weight below degeneracy floor at an evaluation point")]
    DegenerateGradient,

    #[error("rejection rate {rate:.3e} at or above 1e-3; estimate invalid")]
    ExcessiveRejections { rate: f64 },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("grid misses {outside:.3e} of the level distribution (limit {limit:.1e})")]
    InsufficientCoverage { outside: f64, limit: f64 },

    #[error("operation is defined for ball shapes only")]
    NotABall,

    #[error("estimated measure is zero at t = {t}; body too small for the sample size")]
    ZeroMeasure { t: f64 },

    #[error("root solve failed: {0}")]
    Solver(String),

    #[error("2-d boundary quadrature unavailable: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
