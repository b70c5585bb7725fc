use std::io;

use thiserror::Error;

/// Errors produced by the emulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("snapshot {index}: {source}")]
    Snapshot {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("path {path} delay {delay_s:e} s exceeds max delay spread {max_delay_s:e} s")]
    DelayOutOfRange {
        path: usize,
        delay_s: f64,
        max_delay_s: f64,
    },

    #[error("slot {got} arrived out of order (expected {expected})")]
    Sequencing { expected: u64, got: u64 },

    #[error("end of scenario: slot {slot_index} is past the last snapshot")]
    EndOfScenario { slot_index: u64 },

    #[error("framing error: {0}")]
    Framing(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },

    #[error("no reference: every snapshot has zero coherent path gain")]
    NoReference,

    #[error("undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }

    /// Wraps an error with the index of the snapshot that produced it.
    pub fn at_snapshot(self, index: usize) -> Self {
        Error::Snapshot {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
