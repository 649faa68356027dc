use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum PifError {
    #[error("degenerate minimal sample: {0}")]
    Degenerate(&'static str),

    #[error("model pool exhausted after {failures} degenerate samples ({drawn} of {requested} models fitted)")]
    PoolExhausted {
        failures: usize,
        drawn: usize,
        requested: usize,
    },

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("unknown {what}: {name:?}")]
    UnknownName { what: &'static str, name: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("input format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = PifError> = std::result::Result<T, E>;
