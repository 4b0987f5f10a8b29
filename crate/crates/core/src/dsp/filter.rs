//! Linear-phase FIR high-pass design and zero-phase application.
//!
//! `cutoff_hz` names the nominal corner of a transition band that runs from
//! `cutoff/2` (stopband edge) to `2·cutoff` (passband edge). The sinc
//! prototype is centred in that band and shaped by a Kaiser window.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KAISER_BETA: f64 = 5.0;
/// Position of the sinc corner within `[cutoff/2, 2·cutoff]`.
const CORNER_FACTOR: f64 = 1.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterKernel {
    taps: Vec<f64>,
    fs: f64,
    cutoff_hz: f64,
}

impl FilterKernel {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser(n: usize, beta: f64) -> Vec<f64> {
    let m = (n - 1) as f64;
    let norm = bessel_i0(beta);
    (0..n)
        .map(|i| {
            let r = 2.0 * i as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm
        })
        .collect()
}

/// Windowed-sinc high-pass by spectral inversion of a unit-DC low-pass.
pub fn design_highpass(fs: f64, cutoff_hz: f64, n_taps: usize) -> Result<FilterKernel> {
    let nyquist = fs / 2.0;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::InvalidParameter(format!("sample rate {fs} Hz")));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::InvalidParameter(format!("cutoff {cutoff_hz} Hz must lie in (0, {nyquist})")));
    }
    if n_taps % 2 == 0 || n_taps < 11 {
        return Err(Error::InvalidParameter(format!("tap count {n_taps} must be odd and at least 11")));
    }
    let corner = (CORNER_FACTOR * cutoff_hz).min(0.5 * (cutoff_hz + nyquist));
    let fc = corner / fs;
    let half = n_taps / 2;
    let window = kaiser(n_taps, KAISER_BETA);

    let mut lowpass = vec![0.0; n_taps];
    for i in 0..=half {
        let x = i as f64 - half as f64;
        let sinc = if i == half { 2.0 * fc } else { (2.0 * PI * fc * x).sin() / (PI * x) };
        let v = sinc * window[i];
        lowpass[i] = v;
        lowpass[n_taps - 1 - i] = v;
    }
    let dc: f64 = lowpass.iter().sum();
    let mut taps: Vec<f64> = lowpass.iter().map(|v| -v / dc).collect();
    taps[half] += 1.0;
    // Re-mirror so rounding in the normalization cannot break symmetry.
    for i in 0..half {
        taps[n_taps - 1 - i] = taps[i];
    }
    Ok(FilterKernel { taps, fs, cutoff_hz })
}

/// Zero-phase filtering: the symmetric kernel is centred on each output
/// sample, with reflection padding (edge sample not repeated) at both ends.
pub fn apply_filter(signal: &[f64], kernel: &FilterKernel) -> Result<Vec<f64>> {
    let taps = kernel.taps();
    if signal.len() < taps.len() {
        return Err(Error::Data(format!(
            "signal of {} samples is shorter than the {}-tap kernel",
            signal.len(),
            taps.len()
        )));
    }
    let half = taps.len() / 2;
    let n = signal.len();
    let mut padded = Vec::with_capacity(n + 2 * half);
    padded.extend((1..=half).rev().map(|i| signal[i]));
    padded.extend_from_slice(signal);
    padded.extend((0..half).map(|i| signal[n - 2 - i]));
    Ok((0..n).map(|i| padded[i..i + taps.len()].iter().zip(taps).map(|(x, h)| x * h).sum()).collect())
}
