use thiserror::Error;

use crate::env::RoutingFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user input: out-of-range ids, disconnected graphs, unknown names.
    #[error("input error: {0}")]
    Input(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("capacity error: {qubits} qubits do not fit on {nodes} nodes")]
    Capacity { qubits: usize, nodes: usize },

    #[error("undefined ratio: original depth is zero")]
    UndefinedRatio,

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("routing failed after {} steps", .0.steps)]
    Routing(Box<RoutingFailure>),

    #[error("no solution within depth bound {0}")]
    NoSolution(usize),

    #[error("routed circuit failed validation: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
