use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed input file; `line` is 1-based when known.
    #[error("{path}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error("line count mismatch: {path} has {found} lines, expected {expected}")]
    LineCountMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid feature store: {0}")]
    InvalidFeatures(String),

    #[error("raw score {0} outside [0, 100]")]
    ScoreOutOfRange(f64),

    #[error("loss {0} outside [0, 1]")]
    LossOutOfRange(f64),

    #[error("regret change {value} outside [{min}, {max}]")]
    RegretDeltaOutOfRange { value: f64, min: f64, max: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("index {index} out of range (size {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("strategy {strategy} needs {what}, which is not available")]
    MissingFeature {
        strategy: &'static str,
        what: &'static str,
    },

    #[error("segment {0} was already recorded")]
    DuplicateSegment(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("segment {segment} ({stage}): {source}")]
    Run {
        segment: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at(self, segment: usize, stage: &'static str) -> Self {
        Error::Run {
            segment,
            stage,
            source: Box::new(self),
        }
    }
}
