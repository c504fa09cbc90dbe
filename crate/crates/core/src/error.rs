use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("document {doc_id}: annotation index {index} for type {type_id} is out of range ({len} sentences)")]
    AnnotationOutOfRange {
        doc_id: String,
        type_id: String,
        index: usize,
        len: usize,
    },

    #[error("duplicate document id {0}")]
    DuplicateDocument(String),

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("invalid phrase lists: {0}")]
    InvalidPhrases(String),

    #[error("invalid generator spec: {0}")]
    InvalidGeneratorSpec(String),

    #[error("invalid fold split: {0}")]
    InvalidSplit(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("type {type_id}: {stage}: {message}")]
    Training {
        type_id: String,
        stage: &'static str,
        message: String,
    },

    #[error("model file {path}: parse error at line {line}, column {column} (byte offset {offset}): {message}")]
    ModelParse {
        path: PathBuf,
        line: usize,
        column: usize,
        offset: usize,
        message: String,
    },

    #[error("model file {path}: format version {found} is not supported (expected {expected})")]
    ModelVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("unknown information type {0}")]
    UnknownType(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn training(type_id: &str, stage: &'static str, message: impl Into<String>) -> Self {
        Error::Training {
            type_id: type_id.to_string(),
            stage,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
