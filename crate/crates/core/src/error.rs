use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cutoff {cutoff} outside 1..={max}")]
    CutoffOutOfRange { cutoff: usize, max: usize },

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("grid of {grid} points cannot resolve wavenumber {max_wavenumber} (need at least {required})")]
    GridTooCoarse {
        grid: usize,
        max_wavenumber: usize,
        required: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inconsistent kernel bounds: lower {lower} > upper {upper}")]
    InconsistentKernelBounds { lower: f64, upper: f64 },

    #[error("kernel sample {index} = {value} violates bounds [{lower}, {upper}]")]
    KernelOutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("field is not confined to the {0} mode space")]
    WrongModeSpace(&'static str),

    #[error("state diverged at step {step}")]
    StepDiverged { step: usize },

    #[error("path with seed {seed}, stream {stream_id} diverged at step {step}")]
    PathDiverged {
        seed: u64,
        stream_id: u64,
        step: usize,
    },

    #[error("low mode {mode} (wavenumber {wavenumber}) is not forced; binding control impossible")]
    UncontrollableMode { mode: usize, wavenumber: usize },

    #[error("drift and noise paths are misaligned: {0}")]
    MisalignedPaths(String),

    #[error("exponential fit needs positive values (index {index} is {value})")]
    FitDomain { index: usize, value: f64 },

    #[error("exponential fit needs at least {required} points, got {actual}")]
    TooFewPoints { required: usize, actual: usize },

    #[error("threshold computations disagree: formula gives {formula}, spectrum gives {spectral}")]
    ThresholdMismatch { formula: usize, spectral: usize },

    #[error("snapshot times differ between ensembles")]
    SnapshotMismatch,

    #[error("ensemble has no energy series recorded")]
    MissingEnergySeries,

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("worker pool: {0}")]
    Pool(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
