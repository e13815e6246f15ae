use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix `{what}` is not positive definite")]
    NotPositiveDefinite { what: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation interval ({lower}, {upper}) has negligible probability mass")]
    ImpossibleTruncation { lower: f64, upper: f64 },

    #[error("validation error at line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("{classes} classes exceeds the exhaustive permutation bound of 8")]
    TooManyClasses { classes: usize },

    #[error("all class log-densities are -inf for patient {patient}")]
    DegenerateClassPosterior { patient: String },

    #[error("log density is -inf for patient {patient}")]
    ZeroDensity { patient: String },

    #[error("zero within-chain variance")]
    ZeroVariance,

    #[error("sampler failed at iteration {iteration}: {source}")]
    Sampler {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("draws file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Renames the matrix in a [`Error::NotPositiveDefinite`]; other variants pass through.
    pub fn for_matrix(self, what: impl Into<String>) -> Self {
        match self {
            Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { what: what.into() },
            other => other,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
