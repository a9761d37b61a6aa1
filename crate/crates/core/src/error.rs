use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("non-finite coordinate at point {index}")]
    NonFinitePoint { index: usize },

    #[error("consecutive duplicate points at index {index}")]
    DuplicatePoint { index: usize },

    #[error("empty lane graph")]
    EmptyLaneGraph,

    #[error("lane segment {id}: {reason}")]
    InvalidSegment { id: String, reason: String },

    #[error("duplicate lane id {0}")]
    DuplicateLaneId(String),

    #[error("unknown lane segment {0}")]
    UnknownSegment(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("no prediction modes")]
    NoPredictionModes,

    #[error("invalid prediction set: {0}")]
    InvalidPredictions(String),

    #[error("sequence {sequence_id}: has {available} modes, {requested} requested")]
    NotEnoughModes {
        sequence_id: String,
        available: usize,
        requested: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty miss matrix")]
    EmptyMissMatrix,

    #[error("no evaluable sequences")]
    NoSequences,

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("{file}: {source}")]
    File {
        file: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_file(self, file: impl Into<PathBuf>) -> Self {
        Error::File {
            file: file.into(),
            source: Box::new(self),
        }
    }
}
