use std::path::PathBuf;

use crate::field::WaveField;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates a constraint. `key` names the offending
    /// parameter (dotted config key where one exists).
    #[error("invalid configuration for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },

    /// An operation was called outside its domain.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("centroid undefined for a field with zero power")]
    UndefinedCentroid,

    /// The evolution produced a non-finite amplitude or an unphysical jump in
    /// power. `last_finite` is the state at the start of the failing step.
    #[error("simulation diverged at t = {t}: {reason}")]
    Diverged {
        t: f64,
        reason: String,
        last_finite: Box<WaveField>,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn contract(message: impl Into<String>) -> Self {
        Error::Contract(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
