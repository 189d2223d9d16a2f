use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// The tree is not specified deeply enough for an exact computation.
    #[error("{op}: tree must be fully specified to depth {required}, but its frontier is at depth {available}")]
    InsufficientDepth {
        op: &'static str,
        required: u32,
        available: u32,
    },

    /// A walk reached a node whose children were never generated.
    #[error("walk reached unexpanded node {node} at depth {depth}")]
    BeyondHorizon { node: usize, depth: u32 },

    /// The symmetric factorization met a pivot that is not strictly positive.
    #[error("non-positive pivot {value:e} at index {index} (graph disconnected or numerically singular)")]
    NonPositivePivot { index: usize, value: f64 },

    /// A sampler exceeded its node budget on every permitted attempt.
    #[error("{op}: node cap of {cap} exceeded")]
    CapExceeded { op: &'static str, cap: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        op,
        msg: msg.into(),
    }
}
