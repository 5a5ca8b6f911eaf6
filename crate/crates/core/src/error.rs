use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a formula (non-positive area, t <= 0, ...).
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    /// Inconsistent or invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A precondition of a stability condition is violated (e.g. zero phase angle).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The time stepper produced a non-finite value.
    #[error("numerical blowup at time level {level}, node {node}")]
    Blowup { level: usize, node: usize },

    /// Non-finite sample handed to a norm.
    #[error("non-finite sample at (n = {level}, j = {node})")]
    NonFinite { level: usize, node: usize },

    /// No time step in (0, dx] satisfies the combined condition.
    #[error("no stable time step in (0, {dx}]: slack at smallest probe {slack}")]
    Infeasible { dx: f64, slack: f64 },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Blowup { .. } | Error::NonFinite { .. } => 3,
            _ => 2,
        }
    }
}
