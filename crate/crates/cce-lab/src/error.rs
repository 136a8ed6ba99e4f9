//! Crate-wide error type.
//!
//! Every variant maps to a stable machine-readable category (see
//! [`Error::category`]) that the CLI reports on stderr and folds into
//! its exit code.

use thiserror::Error;

/// Result alias used across the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite or otherwise unusable numeric input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Dimension or shape mismatch between operands.
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    /// A class label outside `[0, num_classes)`.
    #[error("invalid label: {0}")]
    InvalidLabel(String),

    /// An index outside its valid range.
    #[error("invalid index: {0}")]
    InvalidIndex(String),

    /// An operation that requires at least one sample got none.
    #[error("empty batch")]
    EmptyBatch,

    /// Balanced accuracy over a confusion matrix with no samples at all.
    #[error("empty evaluation: no class has any samples")]
    EmptyEvaluation,

    /// A bad parameter value (negative noise, zero batch size, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Inconsistent or unusable run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Requested imbalance ratio cannot be realized from the base count.
    #[error("infeasible ratio: {0}")]
    InfeasibleRatio(String),

    /// A class holds fewer samples than its planned retained count.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    /// A class distribution that violates its invariants (empty class, ...).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Malformed binary file contents (bad magic, bad dimensionality).
    #[error("format error: {0}")]
    Format(String),

    /// Files that are individually valid but mutually inconsistent.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Text parse failure with its location.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Non-finite values where finite ones are required (diverged run, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Operation sequencing violation (backward without a cached forward).
    #[error("state error: {0}")]
    State(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category for CLI reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::InvalidShape(_) => "invalid-shape",
            Error::InvalidLabel(_) => "invalid-label",
            Error::InvalidIndex(_) => "invalid-index",
            Error::EmptyBatch => "empty-batch",
            Error::EmptyEvaluation => "empty-evaluation",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Config(_) => "config",
            Error::InfeasibleRatio(_) => "infeasible-ratio",
            Error::InsufficientSamples(_) => "insufficient-samples",
            Error::InvalidDistribution(_) => "invalid-distribution",
            Error::Format(_) => "format",
            Error::Consistency(_) => "consistency",
            Error::Parse { .. } => "parse",
            Error::Numeric(_) => "numeric",
            Error::State(_) => "state",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
        }
    }
}
