use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A file on disk (WAV, checkpoint, manifest) could not be decoded.
    #[error("format error in `{field}`: {message}")]
    Format { field: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// An API was called out of order (stepping a finished episode, stale cache).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("shape error: {0}")]
    Shape(String),

    /// Optimization produced non-finite values.
    #[error("training error in `{field}`: {message}")]
    Training { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn training(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Training {
            field: field.into(),
            message: message.into(),
        }
    }
}
