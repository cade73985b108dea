use std::time::Duration;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A line of an input artifact could not be accepted.
    #[error("line {line}: {reason}")]
    Ingest { line: usize, reason: String },

    /// A record (exemplar, trial) identified by id was rejected.
    #[error("record {id:?}: {reason}")]
    Record { id: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("ablation {config}: {field} {problem}")]
    Payload {
        config: String,
        field: &'static str,
        problem: &'static str,
    },

    #[error("no verbalization template for relation {0:?}")]
    UnknownRelation(String),

    #[error("generation produced no caption")]
    EmptyOutput,

    #[error("transport failed after {attempts} attempt(s): {last}")]
    Transport {
        attempts: u32,
        status: Option<u16>,
        last: String,
        elapsed: Duration,
    },

    #[error("invalid backend: {0}")]
    Backend(String),

    #[error("ids without a counterpart: {}", .0.join(", "))]
    Alignment(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn ingest(line: usize, reason: impl Into<String>) -> Self {
        Error::Ingest {
            line,
            reason: reason.into(),
        }
    }

    pub fn record(id: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Record {
            id: id.into(),
            reason: reason.into(),
        }
    }
}
