use std::path::Path;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Data, configuration and index errors. LLM transport failures live in
/// [`crate::llm::LlmError`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid CUI {0:?}: expected C followed by 7 digits")]
    InvalidCui(String),

    #[error("{path}:{line}: {reason}")]
    MalformedLine { path: String, line: usize, reason: String },

    #[error("{path}: concept {cui} has no preferred term row")]
    MissingPreferred { path: String, cui: String },

    #[error("cannot build an index over an empty dictionary")]
    EmptyDictionary,

    #[error("query is empty after normalization")]
    EmptyQuery,

    #[error("no candidates to prune")]
    EmptyCandidates,

    #[error("prompt template: {0}")]
    Template(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}:{line}: duplicate prediction for {doc_id}[{start},{end})")]
    DuplicatePrediction {
        path: String,
        line: usize,
        doc_id: String,
        start: usize,
        end: usize,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
