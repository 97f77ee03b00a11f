use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    /// Malformed CSV input. `line` is the 1-based line in the file.
    #[error("{path}: line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid attack model: {0}")]
    InvalidAttack(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    /// A JSON document that does not follow the tree schema.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Command-line misuse (exit code 1).
    #[error("usage: {0}")]
    Usage(String),

    #[error("assignment violates hard clause #{index}: {clause:?}")]
    HardClauseViolated { index: usize, clause: Vec<i32> },

    #[error("assignment does not cover variable {0}")]
    IncompleteAssignment(String),

    #[error("binary variable {name} has fractional value {value}")]
    FractionalBinary { name: String, value: f64 },

    /// The decoded tree makes more errors than the solver claims.
    #[error("verification failed: decoded tree has {verified} errors, solver cost is {claimed}")]
    VerificationMismatch { verified: usize, claimed: usize },

    #[error("warm start: {0}")]
    WarmStart(String),

    #[error("solver output: {0}")]
    SolverParse(String),

    #[error("solver reported the instance infeasible")]
    Infeasible,

    /// The solver stopped without ever producing a model.
    #[error("solver produced no incumbent")]
    NoIncumbent,

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("search space of {size} exceeds the cap of {cap}")]
    CapExceeded { size: f64, cap: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
