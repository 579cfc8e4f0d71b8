use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("lexicon has no pronunciation for '{0}'")]
    Lexicon(String),

    #[error("cannot group tokens into words: {0}")]
    Tokenization(String),

    #[error("infeasible alignment: {frames} frames for {required} mandatory phones")]
    InfeasibleAlignment { frames: usize, required: usize },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("unit '{0}' not in inventory")]
    LookupMiss(String),

    #[error("unresolvable words (neither spliceable nor in lexicon): {}", .0.join(", "))]
    UnresolvableWords(Vec<String>),

    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad WAV file {}", path.display())]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("bad JSON in {}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

macro_rules! shape_err {
    ($($arg:tt)*) => { $crate::error::Error::Shape(format!($($arg)*)) };
}

macro_rules! contract_err {
    ($($arg:tt)*) => { $crate::error::Error::Contract(format!($($arg)*)) };
}

pub(crate) use contract_err;
pub(crate) use shape_err;
