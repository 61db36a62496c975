use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// A single rejected configuration field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },

    #[error("no frames found in {0}")]
    EmptySequence(PathBuf),

    #[error(
        "{path}: raw file holds {len} bytes, not a multiple of the {frame_bytes}-byte frame size"
    )]
    TruncatedRaw {
        path: PathBuf,
        len: u64,
        frame_bytes: u64,
    },

    #[error("frame {index} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    MixedDimensions {
        index: u64,
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("region of interest covers no pixel centers")]
    EmptyMask,

    #[error("invalid blur: {0}")]
    InvalidBlur(String),

    #[error("invalid configuration: {}", join_fields(.0))]
    InvalidConfig(Vec<FieldError>),

    #[error("frame 0 has no reference frame")]
    NoReference,

    #[error("reference frame {needed} is not in the history buffer")]
    InsufficientHistory { needed: u64 },

    #[error("frame {got} does not follow frame {last}")]
    OutOfOrder { last: u64, got: u64 },

    #[error("need at least {needed} frames, got {got}")]
    NotEnoughFrames { needed: usize, got: usize },

    #[error("polynomial fit is rank deficient: {distinct} distinct x values for degree {degree}")]
    RankDeficient { distinct: usize, degree: usize },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),

    #[error("malformed score CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
}

fn join_fields(fields: &[FieldError]) -> String {
    fields
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad configuration rather than bad input data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Self::InvalidConfig(_)
                | Self::InvalidBlur(_)
                | Self::InvalidPolygon(_)
                | Self::EmptyMask
                | Self::InvalidScene(_)
                | Self::UnknownScenario(_)
                | Self::Json { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
