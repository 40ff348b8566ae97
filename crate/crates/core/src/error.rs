use std::path::PathBuf;

use crate::series::Representation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("non-positive value {value} at index {index}")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("expected a {expected} series, found {found}")]
    WrongRepresentation {
        expected: &'static str,
        found: Representation,
    },

    #[error("series of length {len} is too short (need at least {min})")]
    TooShort { len: usize, min: usize },

    #[error("timestamps are not aligned with values: {0}")]
    Timestamps(String),

    #[error("range {start}..{end} is out of bounds for length {len}")]
    OutOfRange { start: usize, end: usize, len: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("window size {s} exceeds a quarter of the series length {len}")]
    WindowTooLarge { s: usize, len: usize },

    #[error("least-squares system is rank deficient for window size {s} and order {order}")]
    RankDeficient { s: usize, order: usize },

    #[error("all boxes are degenerate at every window size (first tried s = {s}); input is constant or polynomial")]
    AllBoxesDegenerate { s: usize },

    #[error("scaling fit for q = {q} needs at least {min} points, got {got}")]
    TooFewPoints { q: f64, got: usize, min: usize },

    #[error("no admissible scaling range for q = {q}")]
    NoAdmissibleRange { q: f64 },

    #[error("q = {q} is missing from the fluctuation surface")]
    MissingQ { q: f64 },

    #[error("Hurst exponent h(2) could not be fitted: {0}")]
    NoHurstExponent(Box<Error>),

    #[error("derivative grid needs at least 3 points, got {0}")]
    GridTooSmall(usize),

    #[error("no calibration entry within a factor 2 of length {len} (nearest is {nearest})")]
    BaselineLengthMismatch { len: usize, nearest: usize },

    #[error("calibration report has no entries")]
    EmptyReport,

    #[error("excision intervals {first:?} and {second:?} overlap")]
    OverlappingIntervals {
        first: (usize, usize),
        second: (usize, usize),
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
