use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("group {0} has fewer than two observations")]
    GroupTooSmall(usize),

    #[error("at least two groups are required")]
    SingleGroup,

    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("matrix has no columns")]
    EmptyDimension,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("estimated null spectrum is degenerate (t2 = {t2})")]
    DegenerateSpectrum { t2: f64 },

    #[error("Imhof quadrature did not reach the accuracy target at x = {x}")]
    QuadratureFailure { x: f64 },

    #[error("invalid trace moments: {0}")]
    InvalidMoments(String),

    #[error("invalid chi-square weights: {0}")]
    InvalidWeights(String),

    #[error("pooled covariance is singular")]
    SingularCovariance,

    #[error("test requires {expected} groups, sample has {found}")]
    WrongGroupCount { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("{labels} labels supplied for {rows} rows")]
    LabelMismatch { rows: usize, labels: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures map to exit code 3, everything else to 2.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSpectrum { .. }
                | Error::QuadratureFailure { .. }
                | Error::InvalidMoments(_)
                | Error::SingularCovariance
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }
}
