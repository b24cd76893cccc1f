use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside the domain at coordinate {coordinate}: {value} not in [{lower}, {upper}]")]
    OutOfBounds {
        coordinate: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("population of {population} cannot supply {required} distinct donors")]
    PopulationTooSmall { population: usize, required: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("missing feature `{0}`")]
    MissingFeature(String),

    #[error("zero-norm vector in cosine similarity")]
    ZeroNorm,

    #[error("no neighbors to aggregate")]
    NoNeighbors,

    #[error("leave-one-problem-out needs at least two problem classes, found {0}")]
    TooFewClasses(usize),

    #[error("duplicate instance (class {class_id}, instance {instance_id})")]
    DuplicateInstance { class_id: u32, instance_id: u32 },

    #[error("performance and feature files cover different instances: {0}")]
    InstanceMismatch(String),

    #[error("incomplete experiment bundle: missing {0}")]
    IncompleteBundle(String),

    #[error("malformed input in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
