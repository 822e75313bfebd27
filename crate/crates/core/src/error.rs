use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("outcome {outcome} on qubit {qubit} has zero probability")]
    ZeroProbability { qubit: usize, outcome: u8 },

    #[error("invalid gate: {field}: {reason}")]
    InvalidGate { field: &'static str, reason: String },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimacs line {line}: {message}")]
    Dimacs { line: usize, message: String },

    #[error("register too large: {n} qubits requested, capacity is {limit}")]
    Capacity { n: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("postselection impossible at step {step}")]
    PostselectionFailed { step: usize },

    #[error("boson model: {0}")]
    Boson(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid_gate(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidGate {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn qubit(index: usize, limit: usize) -> Self {
        Error::IndexOutOfRange {
            what: "qubit",
            index,
            limit,
        }
    }

    /// True for errors that originate in reading a text format.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Dimacs { .. })
    }
}
