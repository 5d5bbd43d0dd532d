use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which covariance failed to invert in KISSME-style learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    Matched,
    Unmatched,
}

impl std::fmt::Display for CovarianceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CovarianceKind::Matched => f.write_str("matched"),
            CovarianceKind::Unmatched => f.write_str("unmatched"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pair {pair} references sample {index}, but only {count} samples exist")]
    PairIndex {
        pair: usize,
        index: usize,
        count: usize,
    },

    #[error("infeasible pair request: {0}")]
    InfeasiblePairs(String),

    #[error("degenerate difference statistics: {0}")]
    DegenerateStats(String),

    /// The covariance inversion failure that makes KISSME unusable on
    /// highly correlated matched pairs.
    #[error("singular {kind} covariance (condition number {condition:e})")]
    SingularCovariance {
        kind: CovarianceKind,
        condition: f64,
    },

    #[error(
        "eigendecomposition of a {dim}x{dim} matrix did not converge (max |entry| {max_abs:e})"
    )]
    Eigen { dim: usize, max_abs: f64 },

    #[error("stage {stage}, group {group}: {source}")]
    Stage {
        stage: usize,
        group: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("truncated model file: expected at least {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::DegenerateStats(_) | Error::SingularCovariance { .. } | Error::Eigen { .. } => {
                true
            }
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
