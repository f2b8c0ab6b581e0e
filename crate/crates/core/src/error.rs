//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A text record could not be parsed. Carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The same key appeared twice in one vector set.
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    /// Two shapes that must agree did not.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    /// A vector entry was NaN or infinite.
    #[error("non-finite value in `{key}` at component {component}")]
    NonFinite { key: String, component: usize },

    /// A centroid group had no members.
    #[error("empty group `{0}`")]
    EmptyGroup(String),

    /// Two vector sets share no keys.
    #[error("no keys in common between the two sets")]
    EmptyIntersection,

    /// The two sides of a paired operation are not aligned.
    #[error("sets are not paired: {0}")]
    NotPaired(String),

    /// Cosine similarity was requested for a zero vector.
    #[error("cosine similarity is undefined for the zero vector{}", match .key { Some(k) => format!(" `{k}`"), None => String::new() })]
    ZeroVector { key: Option<String> },

    /// A precondition on an argument failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Training produced a non-finite or runaway loss. `epoch` is 1-based,
    /// matching the epoch numbers written to training histories.
    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Diverged { epoch: usize, loss: f64 },

    /// Every cell of a hyperparameter grid failed.
    #[error("all {0} grid cells failed")]
    AllCellsFailed(usize),

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
