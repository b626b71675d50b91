//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, scoring, and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Covariance is not symmetric positive definite (asymmetric entries or
    /// a non-positive Cholesky pivot).
    #[error("covariance matrix is not symmetric positive definite")]
    NotSpd,

    /// Tail parameter must satisfy nu > 2 so the covariance exists.
    #[error("tail parameter nu must exceed 2, got {0}")]
    BadNu(f64),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    /// Target signature is the zero vector.
    #[error("target signature must be nonzero")]
    ZeroTarget,

    /// The two algebraic forms of the target-rejecting matrix disagree beyond
    /// tolerance, which signals broken linear algebra upstream.
    #[error("target-rejector identity residual {0:.3e} exceeds tolerance")]
    IdentityMismatch(f64),

    /// Background scaling must be positive.
    #[error("beta must be positive, got {0}")]
    BadBeta(f64),

    /// Score vectors for ROC construction must be nonempty.
    #[error("empty score input")]
    EmptyInput,

    /// Requested false-alarm probability lies outside [0, 1].
    #[error("false-alarm probability {0} outside [0, 1]")]
    OutOfRange(f64),

    /// Scenario field violates its documented range.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A sweep needs at least one beta value.
    #[error("sweep requires a nonempty list of beta values")]
    EmptySweep,

    /// Detector identifier not recognized.
    #[error("unknown detector identifier `{0}`")]
    UnknownDetector(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
