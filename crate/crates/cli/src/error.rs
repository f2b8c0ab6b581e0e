//! Harness-level errors, classified by the exit code they map to:
//! validation problems (bad flags, bad configs, unreadable inputs) exit with
//! code 1, failures during the actual computation exit with code 2.

use std::fmt;

/// Error carrying its exit-code class.
#[derive(Debug)]
pub enum CliError {
    /// Rejected before any real work: exit code 1.
    Validation(String),
    /// Failed while running: exit code 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "invalid input: {msg}"),
            CliError::Runtime(msg) => write!(f, "run failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Marks an error as a validation problem (exit 1).
pub fn validation(err: impl fmt::Display) -> CliError {
    CliError::Validation(err.to_string())
}

/// Marks an error as a runtime failure (exit 2).
pub fn runtime(err: impl fmt::Display) -> CliError {
    CliError::Runtime(err.to_string())
}

/// Extension helpers for classifying `Result`s at the call site.
pub trait Classify<T> {
    fn or_invalid(self) -> CliResult<T>;
    fn or_failed(self) -> CliResult<T>;
}

impl<T, E: fmt::Display> Classify<T> for std::result::Result<T, E> {
    fn or_invalid(self) -> CliResult<T> {
        self.map_err(validation)
    }

    fn or_failed(self) -> CliResult<T> {
        self.map_err(runtime)
    }
}
