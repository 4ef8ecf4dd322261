//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Sample columns are empty, of unequal length, or contain non-finite values.
    #[error("invalid samples: {0}")]
    InvalidSamples(String),

    /// A numeric column has zero variance, so kernel density estimation is impossible.
    #[error("constant column: zero sample variance")]
    ConstantColumn,

    /// A joint distribution violates its invariants (negative cell, bad total, all zero).
    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    /// A probability vector violates its invariants.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A channel matrix violates row-stochasticity.
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// Shapes of paired arguments do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A multiplicative leakage denominator is zero; callers substitute a cap value.
    #[error("degenerate leakage: zero denominator")]
    DegenerateLeakage,

    /// Labels are missing, single-class, or outside the expected set.
    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    /// A feature matrix contains NaN or infinite entries.
    #[error("invalid features: {0}")]
    InvalidFeatures(String),

    /// A dataset file is malformed or inconsistent.
    #[error("dataset error: {0}")]
    Dataset(String),

    /// An experiment or split configuration is out of range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
