use thiserror::Error;

use crate::bigraph::{Day, EdgeKey, NodeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("day {day} outside observed range [{t0}, {t_end}]")]
    DayOutOfRange { day: Day, t0: Day, t_end: Day },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("edge {0} has no day with a determinable label")]
    NeverObserved(EdgeKey),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("no features for {node} at or before day {day}")]
    MissingFeatures { node: NodeId, day: Day },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("walker stuck: no candidate with positive weight")]
    WalkerStuck,

    #[error("context vocabulary too small for negative sampling (size {0})")]
    VocabTooSmall(usize),

    #[error("context id {id} out of range for vocabulary of size {size}")]
    ContextOutOfRange { id: usize, size: usize },

    #[error("training diverged at epoch {epoch}: {what}")]
    Divergence { epoch: usize, what: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dataset has no examples")]
    EmptyDataset,

    #[error("cannot split: {0}")]
    Split(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
