use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: relative asymmetry {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPsd { eigenvalue: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("partition total {total} does not match a {rows}x{cols} matrix")]
    PartitionMismatch { total: usize, rows: usize, cols: usize },

    #[error("majorization hypothesis violated: smallest eigenvalue {eigenvalue:e} below tolerance {threshold:e}")]
    MajorizationViolated { eigenvalue: f64, threshold: f64 },

    #[error("residual {residual:e} exceeds tolerance {tolerance:e} ({context})")]
    ResidualTooLarge {
        residual: f64,
        tolerance: f64,
        context: String,
    },

    #[error("NotNilpotent: relative norm of A^{power} is {ratio:e}")]
    NotNilpotent { power: usize, ratio: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient data: {available} values above cutoff, need at least {required}")]
    InsufficientData { available: usize, required: usize },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
