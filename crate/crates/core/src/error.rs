use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An operation was called outside the region it is defined for.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("request stream not sorted: event {index} at t={time} precedes t={previous}")]
    UnsortedStream {
        index: usize,
        time: f64,
        previous: f64,
    },

    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("trace spans zero time")]
    ZeroDuration,

    #[error("LRU state space has {states} states (limit {limit})")]
    StateSpaceTooLarge { states: u64, limit: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
