use thiserror::Error;

use crate::pekar::PekarSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("function is not normalized (|norm - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("self-consistent loop did not converge after {iterations} iterations (last |dE| = {last_change:.3e})")]
    ScfNotConverged {
        iterations: usize,
        last_change: f64,
        last: Box<PekarSolution>,
    },

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error("refinement level {level} (spacing {spacing}) failed: {source}")]
    LevelFailed {
        level: usize,
        spacing: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("ill-conditioned overlap between terms {first} and {second} (normalized overlap {overlap:.12})")]
    IllConditioned {
        first: usize,
        second: usize,
        overlap: f64,
    },

    #[error("optimizer failed on every restart (best value seen {best:.6e})")]
    OptimizerFailed { best: f64 },

    #[error("quadrature did not reach tolerance {tolerance:.1e} (estimated error {estimate:.3e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("U = {u} lies outside the curve range [{lo}, {hi}]")]
    Extrapolation { u: f64, lo: f64, hi: f64 },

    #[error("mode set is not symmetric: {0}")]
    Symmetry(String),

    #[error("operator dimension {dimension} exceeds the cap {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("Lanczos did not converge after {iterations} matrix-vector products (Ritz value {ritz}, residual {residual:.3e})")]
    LanczosNotConverged {
        iterations: usize,
        ritz: f64,
        residual: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
