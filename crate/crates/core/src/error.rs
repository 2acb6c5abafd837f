use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid interval: lower endpoint {lo} is not below upper endpoint {hi}")]
    InvalidInterval { lo: String, hi: String },

    #[error("core of interval ({lo}, {hi}) is empty")]
    EmptyCore { lo: String, hi: String },

    #[error("value {value} outside range [0, {limit})")]
    OutOfRange { value: u64, limit: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stage {stage}: selection violates the construction hypothesis: {reason}")]
    HypothesisViolation { stage: u64, reason: String },

    #[error("stage {stage}: no unseen eligible set within the candidate cap of {cap}")]
    SelectionExhausted { stage: u64, cap: u64 },

    #[error("k0 audit failed at stage {stage}: {reason}")]
    K0Violation { stage: u64, reason: String },

    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
