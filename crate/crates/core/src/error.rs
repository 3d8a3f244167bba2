use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("runaway avalanche: more than {cap} topplings in a single cascade")]
    RunawayAvalanche { cap: usize },

    #[error("settlement fault: {0}")]
    Settlement(String),

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig { .. } | Error::UnknownKey(_) => "config",
            Error::RunawayAvalanche { .. } => "runaway_avalanche",
            Error::Settlement(_) => "settlement",
            Error::Degenerate(_) => "degenerate",
            Error::Input(_) => "input",
            Error::Parse { .. } => "parse",
            Error::MissingInput(_) => "missing_input",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    /// The configuration key this error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::InvalidConfig { key, .. } => Some(key),
            Error::UnknownKey(key) => Some(key),
            _ => None,
        }
    }
}
