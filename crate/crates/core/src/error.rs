use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at data row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("singular design: column `{column}` is linearly dependent on the preceding columns")]
    SingularDesign { column: String },

    #[error("insufficient pairs: {0}")]
    InsufficientPairs(String),

    #[error("covariance matrix is not positive definite (jitter up to {max_jitter:e})")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("campaign failure: {0}")]
    Campaign(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) | Error::Csv(_)
        )
    }
}
