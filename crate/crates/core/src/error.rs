use thiserror::Error;

use crate::tower::PowerImage;

/// Errors raised by the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A spacer rule produced a value outside its contract.
    #[error("invalid spacer rule at stage {stage}{}: {reason}", index.as_ref().map(|j| format!(", index {j}")).unwrap_or_default())]
    Construction {
        stage: usize,
        index: Option<String>,
        reason: String,
    },
    #[error("domain error: {0}")]
    Domain(String),
    /// The piece or depth budget ran out before an exact answer was reached.
    /// `partial` carries the resolved part when the caller asked for strict exactness.
    #[error("budget exhausted: {reason}")]
    Budget {
        reason: String,
        partial: Option<Box<PowerImage>>,
    },
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("value out of range: {0}")]
    Overflow(String),
    #[error("config error: {0}")]
    Config(String),
    /// A report file lacks a field the consumer needs.
    #[error("report schema mismatch: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn budget(msg: impl Into<String>) -> Self {
        Error::Budget {
            reason: msg.into(),
            partial: None,
        }
    }

    pub(crate) fn construction(stage: usize, index: Option<String>, reason: impl Into<String>) -> Self {
        Error::Construction {
            stage,
            index,
            reason: reason.into(),
        }
    }
}
