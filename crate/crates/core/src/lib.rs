//! Sound event detection toolkit.
//!
//! - [`frontend`]: waveform normalization and log-mel features
//! - [`augment`]: FilterAugment, frequency/time masking, frameshift, mixup,
//!   Gaussian noise and student/teacher view construction
//! - [`postprocess`]: thresholding, weak prediction masking, median filtering,
//!   event decoding and weak SED
//! - [`evaluate`]: intersection-based PSDS and collar-based event F1
//! - [`harness`]: synthetic scenes, a deterministic toy detector and the
//!   augmentation ablation runner
//! - [`io`]: WAV, CSV/JSON and TSV file formats
//! - [`cli`]: the `sedkit` command line

pub mod augment;
pub mod cli;
pub mod error;
pub mod evaluate;
pub mod frontend;
pub mod harness;
pub mod io;
pub mod postprocess;
pub mod rng;

pub use error::{Result, SedError};
pub use rng::Rng;
