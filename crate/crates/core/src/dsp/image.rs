//! Spectrogram (or factor) matrices as normalized images, and plain
//! PGM/PPM output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsp::stft::Spectrogram;
use crate::matrix::Matrix;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageMode {
    #[default]
    LogGray,
    LogRgbReplicate,
}

impl ImageMode {
    pub fn channels(self) -> usize {
        match self {
            ImageMode::LogGray => 1,
            ImageMode::LogRgbReplicate => 3,
        }
    }
}

/// `log1p` then per-matrix min-max to `[0, 1]`; a constant matrix maps to
/// all zeros. Returns a `[channels, rows, cols]` tensor.
pub fn matrix_to_image(m: &Matrix, mode: ImageMode) -> Tensor {
    let logged: Vec<f64> = m.as_slice().iter().map(|v| v.ln_1p()).collect();
    let lo = logged.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logged.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let plane: Vec<f64> =
        if span > 0.0 { logged.iter().map(|v| (v - lo) / span).collect() } else { vec![0.0; logged.len()] };
    let channels = mode.channels();
    let mut data = Vec::with_capacity(plane.len() * channels);
    for _ in 0..channels {
        data.extend_from_slice(&plane);
    }
    Tensor::new(vec![channels, m.rows(), m.cols()], data).expect("image dimensions")
}

pub fn to_image(sp: &Spectrogram, mode: ImageMode) -> Tensor {
    matrix_to_image(&sp.magnitudes, mode)
}

/// Plain (ASCII) PGM for one channel, PPM for three; maxval 255.
pub fn write_pnm(img: &Tensor) -> Vec<u8> {
    let (c, h, w) = img.chw().expect("image tensor is [c, h, w]");
    let magic = if c == 3 { "P3" } else { "P2" };
    let plane = h * w;
    let mut out = format!("{magic}\n{w} {h}\n255\n");
    let level = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    for r in 0..h {
        let mut row = Vec::with_capacity(w * c);
        for col in 0..w {
            for ch in 0..c.min(3) {
                row.push(level(img.data()[ch * plane + r * w + col]).to_string());
            }
        }
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out.into_bytes()
}
