use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures while reading or validating a ratings file.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate rating for user `{user}` on item `{item}`")]
    Duplicate {
        line: usize,
        user: String,
        item: String,
    },
    #[error("line {line}: rating {value} is outside the allowed scale {min}..={max}")]
    OutOfScale {
        line: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("line {line}: rating {value} is not on the half-step grid")]
    OffGrid { line: usize, value: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{what} index {index} out of range (size {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("degenerate features: input has zero variance")]
    DegenerateFeatures,
    #[error("linear system is singular")]
    Singular,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<Error>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.into().at_stage(stage))
    }
}
