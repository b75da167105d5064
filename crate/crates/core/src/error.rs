use thiserror::Error;

/// Errors from constructing or combining the domain types.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// The standing assumption is 0 < p < 1; all-positive or all-negative
    /// instance spaces are rejected at construction.
    #[error("degenerate class distribution: positive rate p = {p} must lie strictly in (0, 1)")]
    DegenerateClassDistribution { p: f64 },

    #[error("invalid score vector: {0}")]
    InvalidScore(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid loss specification: {0}")]
    InvalidLoss(String),

    #[error("grid oracle rejects {n} instances (limit {limit})")]
    TooManyInstances { n: usize, limit: usize },

    #[error("empty grid specification")]
    EmptyGrid,

    #[error("{0}")]
    Unsupported(String),
}
