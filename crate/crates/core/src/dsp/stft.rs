//! Short-time Fourier transform magnitude spectrograms.
//!
//! With the default parameters a 200-sample segment yields 64 one-sided
//! frequency bins (`126/2 + 1`) by 26 frames (`(200 − 48)/6 + 1`).

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dsp::segment::Segment;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Hamming,
    Rect,
}

impl WindowKind {
    /// Periodic (DFT-even) window coefficients.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let phase = |i: usize| 2.0 * PI * i as f64 / n as f64;
        (0..n)
            .map(|i| match self {
                WindowKind::Hann => 0.5 - 0.5 * phase(i).cos(),
                WindowKind::Hamming => 0.54 - 0.46 * phase(i).cos(),
                WindowKind::Rect => 1.0,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
    pub window: WindowKind,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams { window_len: 48, hop: 6, fft_len: 126, window: WindowKind::Hann }
    }
}

impl StftParams {
    pub fn n_bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    pub fn n_frames(&self, signal_len: usize) -> usize {
        if signal_len < self.window_len || self.hop == 0 {
            0
        } else {
            (signal_len - self.window_len) / self.hop + 1
        }
    }

    pub fn validate(&self, signal_len: usize) -> Result<()> {
        if self.window_len == 0 || self.hop == 0 {
            return Err(Error::InvalidParameter("window length and hop must be positive".into()));
        }
        if self.fft_len < self.window_len {
            return Err(Error::InvalidParameter(format!(
                "fft length {} shorter than window {}",
                self.fft_len, self.window_len
            )));
        }
        if signal_len < self.window_len {
            return Err(Error::Shape(format!("{signal_len} samples cannot hold a {}-sample window", self.window_len)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    /// bins × frames, all entries ≥ 0.
    pub magnitudes: Matrix,
    /// Hz, one per row.
    pub freq_axis: Vec<f64>,
    /// Seconds from session start at each frame centre.
    pub time_axis: Vec<f64>,
}

/// A planned STFT for fixed parameters and sample rate; reusable across
/// segments and threads.
#[derive(Clone)]
pub struct Stft {
    params: StftParams,
    fs: f64,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft").field("params", &self.params).field("fs", &self.fs).finish()
    }
}

impl Stft {
    pub fn new(params: StftParams, fs: f64) -> Result<Self> {
        params.validate(params.window_len)?;
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidParameter(format!("sample rate {fs} Hz")));
        }
        let fft = FftPlanner::new().plan_fft_forward(params.fft_len);
        Ok(Stft { window: params.window.coefficients(params.window_len), params, fs, fft })
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    pub fn compute(&self, values: &[f64], t_start: f64) -> Result<Spectrogram> {
        let p = &self.params;
        p.validate(values.len())?;
        let bins = p.n_bins();
        let frames = p.n_frames(values.len());
        let mut mags = Matrix::zeros(bins, frames);
        let mut buf = vec![Complex::new(0.0, 0.0); p.fft_len];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for j in 0..frames {
            let frame = &values[j * p.hop..j * p.hop + p.window_len];
            for (slot, (x, w)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                *slot = Complex::new(x * w, 0.0);
            }
            for slot in &mut buf[p.window_len..] {
                *slot = Complex::new(0.0, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, c) in buf[..bins].iter().enumerate() {
                mags.set(k, j, c.norm());
            }
        }
        let freq_axis = (0..bins).map(|k| k as f64 * self.fs / p.fft_len as f64).collect();
        let time_axis = (0..frames)
            .map(|j| t_start + (j * p.hop) as f64 / self.fs + p.window_len as f64 / (2.0 * self.fs))
            .collect();
        Ok(Spectrogram { magnitudes: mags, freq_axis, time_axis })
    }
}

/// Magnitude spectrogram of one segment.
pub fn stft_magnitude(seg: &Segment, params: &StftParams, fs: f64) -> Result<Spectrogram> {
    Stft::new(*params, fs)?.compute(&seg.values, seg.t_start)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(values: Vec<f64>) -> Segment {
        Segment { index: 0, values, t_start: 0.0, label: None, mother_id: "m".into() }
    }

    #[test]
    fn default_shape_is_64_by_26() {
        let p = StftParams::default();
        assert_eq!(p.n_bins(), 64);
        assert_eq!(p.n_frames(200), 26);
        let sp = stft_magnitude(&seg(vec![0.0; 200]), &p, 50.0).unwrap();
        assert_eq!(sp.magnitudes.shape(), (64, 26));
        assert!(sp.magnitudes.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(sp.freq_axis.len(), 64);
        assert_eq!(sp.time_axis.len(), 26);
    }

    #[test]
    fn bin_centred_sinusoid_peaks_at_its_bin() {
        let p = StftParams::default();
        let fs = 50.0;
        for k in [5usize, 12, 20, 40] {
            let f = k as f64 * fs / p.fft_len as f64;
            let x: Vec<f64> = (0..200).map(|n| (2.0 * PI * f * n as f64 / fs).cos()).collect();
            let sp = stft_magnitude(&seg(x), &p, fs).unwrap();
            for j in 0..26 {
                let col: Vec<f64> = (0..64).map(|r| sp.magnitudes.get(r, j)).collect();
                let argmax = col.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
                assert_eq!(argmax, k, "frame {j}");
            }
        }
    }

    #[test]
    fn parameter_mismatch_is_an_error() {
        let bad = StftParams { fft_len: 32, ..Default::default() };
        assert!(stft_magnitude(&seg(vec![0.0; 200]), &bad, 50.0).is_err());
        assert!(stft_magnitude(&seg(vec![0.0; 40]), &StftParams::default(), 50.0).is_err());
    }
}
