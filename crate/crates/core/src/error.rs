use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Gamma evaluated at a non-positive integer.
    #[error("pole of the gamma function at x = {0}")]
    Pole(f64),

    /// Result exceeds the representable floating point range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// A function diverges at the requested point (e.g. K_nu(0)).
    #[error("divergence: {0}")]
    Divergence(String),

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    /// A structural hypothesis required by a bound is not met.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The solver produced |X| above the blow-up threshold.
    #[error("blow-up at time step {step}, cell {cell}: |X| = {value:e}")]
    BlowUp { step: usize, cell: usize, value: f64 },

    #[error("need at least {needed} replicas, got {got}")]
    TooFewReplicas { needed: usize, got: usize },

    #[error("non-positive moment value {value} at time index {index}")]
    NonPositiveMoment { index: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
