use thiserror::Error;

use crate::model::{FileId, SubfileLabel, WorkerId, WorkerSet};

pub type Result<T> = std::result::Result<T, ShuffleError>;

#[derive(Debug, Error)]
pub enum ShuffleError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("graph is not regular: {0}")]
    NotRegular(String),

    #[error("sub-message index {delta} must have {expected} workers drawn from 1..{max}")]
    InvalidDelta {
        delta: WorkerSet,
        expected: usize,
        max: WorkerId,
    },

    #[error("missing sub-message {0}")]
    MissingMessage(WorkerSet),

    #[error("redundancy group {psi:?} is missing {missing} members, at most one can be rebuilt")]
    MissingGroupMember { psi: Vec<usize>, missing: usize },

    #[error("worker {worker} cannot decode {target}: residual {residual:?}")]
    DecodeFailure {
        worker: WorkerId,
        target: SubfileLabel,
        residual: Vec<SubfileLabel>,
    },

    #[error("worker {worker} cannot hold {label} after the round: it was neither cached nor decoded")]
    InfeasibleUpdate { worker: WorkerId, label: SubfileLabel },

    #[error("missing payload for {0}")]
    MissingPayload(SubfileLabel),

    #[error("file {0} is out of range")]
    UnknownFile(FileId),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<ShuffleError>,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
