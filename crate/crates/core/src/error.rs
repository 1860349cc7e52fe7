use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("expansion point alpha = {alpha} is unstable (Delta = {delta}, sigma = {sigma})")]
    UnstableExpansionPoint { alpha: f64, delta: f64, sigma: f64 },

    #[error("no convergence after {iterations} iterations: {reason}")]
    NoConvergence { iterations: usize, reason: String },

    #[error("truncation n_max = {n_max} exceeds hard cap {cap}")]
    TruncationOverflow { n_max: usize, cap: usize },

    #[error("overlap matrix has no eigenvalue above the filter threshold {threshold:e}")]
    EmptySubspace { threshold: f64 },

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("non-positive value {value} at abscissa {abscissa} in a log-log fit")]
    NonPositiveValue { abscissa: f64, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{discarded} of {total} trajectories diverged ({fraction:.4} > {limit})")]
    ExcessiveDivergence { discarded: usize, total: usize, fraction: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
