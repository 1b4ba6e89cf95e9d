use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Configuration file / scenario validation failure. `key` names the
    /// offending entry so the CLI can point at it.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("episode failed: {0}")]
    Episode(String),

    #[error("cannot read `{path}`: {source}")]
    FileRead {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
