// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("no data rows")]
    EmptyData,

    #[error("row {row} has {found} fields, header declares {expected}")]
    ArityMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate channel name `{0}`")]
    DuplicateChannel(String),

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("series too short: {len} steps, window needs at least {required}")]
    SeriesTooShort { len: usize, required: usize },

    #[error("index {index} outside valid range {start}..{end}")]
    IndexOutOfRange {
        index: usize,
        start: usize,
        end: usize,
    },

    #[error("train split is empty")]
    EmptyTrainSplit,

    #[error("eval split is empty after the guard gap")]
    EmptyEvalSplit,

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("empty range")]
    EmptyRange,

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("value {value} outside histogram support [{lo}, {hi}]")]
    OutOfSupport { value: f64, lo: f64, hi: f64 },

    #[error("histogram would need {0} bins")]
    TooManyBins(usize),

    #[error("all inclusion weights are zero")]
    AllWeightsZero,

    #[error("histogram is required by the IHS sampler")]
    MissingHistogram,

    #[error("unknown sampler label `{label}`; valid labels: {valid}")]
    UnknownSampler { label: String, valid: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("window shape {found_rows}x{found_cols} does not match model shape {rows}x{cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    #[error("design matrix is singular; use a ridge penalty lambda > 0")]
    SingularDesign,

    #[error("k = {k} exceeds the {n} training pairs")]
    KTooLarge { k: usize, n: usize },

    #[error("{pool} pool has {available} indices, {requested} requested")]
    InsufficientPool {
        pool: &'static str,
        available: usize,
        requested: usize,
    },

    #[error("index {0} is not present in the weight series")]
    MissingIndex(usize),

    #[error("indices must be strictly increasing")]
    UnsortedIndices,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("missing matrix cell ({train}, {eval})")]
    MissingCell { train: String, eval: String },

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
