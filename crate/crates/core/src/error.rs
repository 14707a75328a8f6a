use thiserror::Error;

/// Errors raised by estimation, resampling and aggregation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient sample: need more than {needed} observations, have {available}")]
    InsufficientSample { needed: usize, available: usize },

    #[error("singular design matrix (condition number estimate {condition:.3e})")]
    SingularDesign { condition: f64 },

    #[error("degenerate moving-average extension: {0}")]
    DegenerateExtension(String),

    #[error("covariance is not positive semi-definite: {0}")]
    NumericalCovariance(String),

    #[error("no stable coefficient draw with persistence in [{low}, {high}] after {attempts} attempts")]
    InfeasibleBand { low: f64, high: f64, attempts: usize },

    #[error("{failures} of {requested} bootstrap replicates failed")]
    ReplicateFailures { failures: usize, requested: usize },

    #[error("degenerate cell: {0}")]
    DegenerateCell(String),

    #[error("incomplete grid: {0}")]
    IncompleteGrid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
