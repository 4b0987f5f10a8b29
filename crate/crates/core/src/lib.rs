//! Fetal-movement recognition from abdominal accelerometer recordings.
//!
//! The processing chain is: high-pass filter, 200-sample segmentation,
//! STFT magnitude spectrogram, optional non-negative matrix factorization,
//! and a small convolutional classifier that separates fetal movements from
//! maternal laughs and respiratory background. The four algorithm variants
//! in [`pipeline::AlgorithmId`] combine these stages differently.
//!
//! [`synth`] produces seeded synthetic sessions with exact ground truth so
//! the whole chain can be exercised without clinical data.

pub mod cnn;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod nnmf;
pub mod pipeline;
pub mod seed;
pub mod session;
pub mod synth;
pub mod tensor;
pub mod truth;

pub use dsp::segment::{Label, Segment, SEGMENT_LEN};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use session::SessionRecording;
