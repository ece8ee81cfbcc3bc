use thiserror::Error;

/// Errors produced by the numerical layers of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge after {terms} terms (partial sum {partial_sum})")]
    SeriesNonConvergence { terms: usize, partial_sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("eigen-solver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("density matrix is not physical: {0}")]
    Unphysical(String),

    #[error("truncation too small: population {population:e} in the top Fock level at M = {dim}")]
    Truncation { dim: usize, population: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
