use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("min_count too high: no term occurs at least {0} times")]
    MinCountTooHigh(u64),

    #[error("term not in vocabulary: {0}")]
    UnknownTerm(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no eligible sentence: {0}")]
    NoEligibleSentence(String),

    #[error("taxonomy error at `{path}`: {message}")]
    Taxonomy { path: String, message: String },

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("duplicate node name: {0}")]
    DuplicateNode(String),

    #[error("missing embedding for node `{0}`")]
    MissingEmbedding(String),

    #[error("embedding error: {0}")]
    Embedding(String),

    #[error("no common root found; per-topic parent lists: {0}")]
    NoCommonRoot(String),

    #[error("scorer transport error after {retries} retries: {message}")]
    Transport { retries: u32, message: String },

    #[error("scorer protocol error (code {code}): {message}")]
    Protocol { code: i64, message: String },

    #[error("clustering error: {0}")]
    Clustering(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed {what} at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("bad binary format: {0}")]
    Format(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}
