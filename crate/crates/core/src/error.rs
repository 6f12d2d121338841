use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the CAA library.
#[derive(Debug, Error)]
pub enum CaaError {
    #[error("column {0} has zero sample variance")]
    ConstantColumn(usize),

    #[error("input contains NaN or infinite values")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("SVD did not converge within the iteration cap")]
    ConvergenceFailure,

    #[error("vector is identically zero")]
    ZeroVector,

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no canonical pair reached the relative sparseness target")]
    NoPairsFound,

    #[error("projection column {0} of the canonical pair is constant on the training data")]
    DegenerateProjection(usize),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error on line {line}: expected {expected} columns, found {found}")]
    Schema {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("model format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CaaError {
    /// Short machine-readable tag, used by the CLI's structured error line.
    pub fn kind(&self) -> &'static str {
        match self {
            CaaError::ConstantColumn(_) => "constant_column",
            CaaError::NonFinite => "non_finite",
            CaaError::DimensionMismatch { .. } => "dimension_mismatch",
            CaaError::ConvergenceFailure => "convergence_failure",
            CaaError::ZeroVector => "zero_vector",
            CaaError::ZeroMatrix => "zero_matrix",
            CaaError::InvalidConfig(_) => "invalid_config",
            CaaError::InvalidArgument(_) => "invalid_argument",
            CaaError::NoPairsFound => "no_pairs_found",
            CaaError::DegenerateProjection(_) => "degenerate_projection",
            CaaError::SingleClass => "single_class",
            CaaError::InsufficientData(_) => "insufficient_data",
            CaaError::InvalidSpec(_) => "invalid_spec",
            CaaError::Parse { .. } => "parse_error",
            CaaError::Schema { .. } => "schema_error",
            CaaError::Format(_) => "format_error",
            CaaError::Io { .. } => "io_error",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CaaError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CaaError>;
