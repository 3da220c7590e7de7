use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] robust_elicit_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Config { key: key.into(), reason: reason.into() }
    }

    pub fn format(what: &'static str, reason: impl Into<String>) -> Self {
        HarnessError::Format { what, reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// 2 for numerical failures, 1 for everything the caller got wrong.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::format("csv", e.to_string())
    }
}
