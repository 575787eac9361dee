use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A rotation fell outside the domain of the log map.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    /// Integration step too coarse for the current rates.
    #[error("step too large: {0}")]
    StepTooLarge(String),

    #[error("joint `{joint}` left the validity envelope (angle {angle:.4} rad)")]
    EnvelopeExceeded { joint: String, angle: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse { path: path.into(), message: message.to_string() }
    }
}
