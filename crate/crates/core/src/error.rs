use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector entries must be finite (index {index} is {value})")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{stage} did not converge after {iterations} iterations (best residual {residual:e})")]
    NotConverged {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("subproblem is unbounded below: {0}")]
    Unbounded(String),

    #[error("bifunction is not monotone (symmetric-part minimum eigenvalue {min_eigenvalue:e})")]
    NotMonotone { min_eigenvalue: f64 },

    #[error("point is not a fixed point of the map (residual {residual:e})")]
    NotFixedPoint { residual: f64 },

    #[error("unknown problem `{name}`; available: {}", available.join(", "))]
    UnknownProblem { name: String, available: Vec<String> },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Prefixes the field path of a schema error.
    pub(crate) fn at(self, prefix: &str) -> Self {
        match self {
            Error::Schema { path, message } => Error::Schema {
                path: if path.is_empty() {
                    prefix.to_string()
                } else {
                    format!("{prefix}.{path}")
                },
                message,
            },
            other => Error::Schema {
                path: prefix.to_string(),
                message: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
