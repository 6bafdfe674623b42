use thiserror::Error;

/// Errors raised by the self-testing toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("operator check failed: {0}")]
    Operator(String),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid strategy: {0}")]
    Strategy(String),

    #[error("malformed input at `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("correlation check failed: {0}")]
    Correlation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
