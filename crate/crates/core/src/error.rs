use std::io;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    #[error("rank {rank} out of range for a collection of {len} elements")]
    RankOutOfRange { rank: usize, len: usize },

    #[error("table overfull: cuckoo insertion failed after {kicks} displacements and an emergency maintenance")]
    Overfull { kicks: usize },

    #[error("cannot merge samples built with different hash salts ({expected:#x} vs {found:#x})")]
    HashMismatch { expected: u64, found: u64 },

    #[error("empty stream")]
    EmptyStream,

    #[error("parse error at line {line}: {text:?}")]
    Parse { line: usize, text: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Param {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
