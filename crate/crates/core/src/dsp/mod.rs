//! Shared front end: high-pass filter, segmentation and labeling,
//! STFT magnitude spectrograms and their image normalization.

pub mod filter;
pub mod image;
pub mod segment;
pub mod stft;

pub use filter::{apply_filter, design_highpass, FilterKernel};
pub use image::{matrix_to_image, to_image, write_pnm, ImageMode};
pub use segment::{label_segments, segment, Label, LabelSource, Segment, SEGMENT_LEN};
pub use stft::{stft_magnitude, Spectrogram, Stft, StftParams, WindowKind};
