use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("dimension {dim} exceeds the dense capacity {cap}; reduce the window")]
    Capacity { dim: usize, cap: usize },
    #[error("propagation step too large: |d/p - d/q| = {gap} (must be < 1)")]
    StepTooLarge { gap: f64 },
    #[error("operator is not bounded below on this window: sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e}")]
    NotBoundedBelow { sigma_min: f64, sigma_max: f64 },
    #[error("approximant violates the decay bound: measured {measured:e} > allowed {allowed:e}")]
    DecayViolation { measured: f64, allowed: f64 },
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
