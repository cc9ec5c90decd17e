use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SedError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SedError {
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("degenerate filterbank: mel row {row} has no positive weight (n_mels too large for n_fft)")]
    DegenerateFilterbank { row: usize },
    #[error("clip too short: {samples} samples cannot be center-padded by {pad}")]
    ClipTooShort { samples: usize, pad: usize },
    #[error("domain mismatch: expected {expected} input")]
    DomainMismatch { expected: &'static str },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("spectrogram has no signal power (all entries at the floor)")]
    NoSignalPower,
    #[error("unknown clip id `{0}`")]
    UnknownClip(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),
    #[error("no operating points")]
    NoOperatingPoints,
    #[error("placement failure: {0}")]
    PlacementFailure(String),
    #[error("invalid input data in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("wav error on {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
}

/// Coarse classification used by the command line to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Input,
}

impl SedError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            SedError::DegenerateFilterbank { .. }
            | SedError::InvalidConfig(_)
            | SedError::PlacementFailure(_) => ErrorKind::Config,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        SedError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SedError::Io {
            path: path.into(),
            source,
        }
    }
}
