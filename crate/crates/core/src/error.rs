use thiserror::Error;

/// Errors raised by parameter validation, graph operations and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("line {line}: duplicate channel between {a} and {b}")]
    DuplicateEdge { line: u64, a: String, b: String },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("insufficient remain on channel {channel}: need {needed}, have {available}")]
    InsufficientRemain {
        channel: u32,
        needed: u64,
        available: u64,
    },

    #[error("insufficient in-flight funds on channel {channel}: need {needed}, have {available}")]
    InsufficientInFlight {
        channel: u32,
        needed: u64,
        available: u64,
    },

    #[error("channel {0} is closed")]
    ChannelClosed(u32),

    #[error("channel {0} still carries in-flight funds")]
    ChannelBusy(u32),

    #[error("channel already exists between {0} and {1}")]
    ChannelExists(String, String),

    #[error("{0} is unbounded for these parameters")]
    Unbounded(&'static str),

    #[error("contract {0} already resolved")]
    AlreadyResolved(String),

    #[error("preimage does not match digest for contract {0}")]
    PreimageMismatch(String),

    #[error("inconsistent action pair: {0}")]
    InconsistentAction(String),

    #[error("clock cannot move backwards from {now} to {requested}")]
    ClockRewind { now: u64, requested: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}
