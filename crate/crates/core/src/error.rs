use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("feature count {0} outside supported range 1..={max}", max = crate::model::MAX_FEATURES)]
    FeatureCount(usize),

    #[error("table has {got} values, expected 2^{m} = {expected}")]
    TableLength {
        m: usize,
        expected: usize,
        got: usize,
    },

    #[error("classifier computes a constant function")]
    ConstantFunction,

    #[error("point has {got} coordinates, table has {expected} features")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {row} outside 1..={max}")]
    RowOutOfRange { row: usize, max: usize },

    #[error("feature {feature} outside 1..={m}")]
    FeatureOutOfRange { feature: usize, m: usize },

    #[error("feature {0} already belongs to the coalition")]
    FeatureInCoalition(usize),

    #[error("coalition size {size} outside 0..={max}")]
    CoalitionSize { size: usize, max: usize },

    #[error("cannot hit an empty set")]
    EmptySetToHit,

    #[error("{0}")]
    UnsupportedCensus(String),

    #[error("checkpoint {path} does not match the requested run: {reason}")]
    CheckpointMismatch { path: PathBuf, reason: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
