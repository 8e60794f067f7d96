use std::io;

use thiserror::Error;

/// Errors raised by the dataset generation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown key `{key}` on line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{what} {value} out of range (valid: {valid})")]
    Bounds {
        what: &'static str,
        value: String,
        valid: String,
    },

    #[error("no base station with id {0}")]
    UnknownBaseStation(u32),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("bad format: {0}")]
    Format(String),

    #[error("unsupported version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("corrupt input at byte offset {offset}: {message}")]
    Corrupt { offset: u64, message: String },

    #[error("record {record}: {message}")]
    Semantic { record: usize, message: String },

    #[error("missing ray file for base station {bs_id}")]
    MissingRayFile { bs_id: u32 },

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors produced while decoding a binary artifact.
    pub fn is_decode_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_) | Error::UnsupportedVersion { .. } | Error::Corrupt { .. } | Error::Semantic { .. }
        )
    }
}
