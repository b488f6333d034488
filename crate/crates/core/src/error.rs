use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure talking to an external scoring or chat service.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },

    #[error("duplicate {what} `{id}`")]
    Duplicate { what: &'static str, id: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("query id mismatch: expected `{expected}`, found `{found}`")]
    QueryMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("stage `{stage}` failed for query `{query_id}`: {source}")]
    Stage {
        stage: &'static str,
        query_id: String,
        #[source]
        source: ServiceError,
    },

    #[error("stage `{stage}` output is required but missing ({path})")]
    MissingStage { stage: String, path: PathBuf },

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn path(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Path {
            path: path.into(),
            source,
        }
    }
}
