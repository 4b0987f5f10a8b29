#![allow(dead_code)]

use std::f64::consts::PI;

use fetalkick_core::cnn::Model;
use fetalkick_core::corpus::CorpusSession;
use fetalkick_core::dsp::{label_segments, LabelSource, StftParams};
use fetalkick_core::pipeline::Classifier;
use fetalkick_core::seed;
use fetalkick_core::session::{quantize, AccelSample, SessionMetadata};
use fetalkick_core::tensor::Tensor;
use fetalkick_core::truth::{GroundTruth, TruthInterval};
use fetalkick_core::{Label, Result, Segment, SessionRecording, SEGMENT_LEN};
use rand::seq::SliceRandom;
use rand::Rng;

/// `|X_k|` of every frame by the textbook DFT sum, `[bin][frame]`.
pub fn direct_stft(values: &[f64], p: &StftParams) -> Vec<Vec<f64>> {
    let win = p.window.coefficients(p.window_len);
    let n_frames = (values.len() - p.window_len) / p.hop + 1;
    let n_bins = p.fft_len / 2 + 1;
    let mut out = vec![vec![0.0; n_frames]; n_bins];
    for f in 0..n_frames {
        let frame = &values[f * p.hop..f * p.hop + p.window_len];
        for (k, row) in out.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, (&x, &w)) in frame.iter().zip(&win).enumerate() {
                let ang = -2.0 * PI * (k * n) as f64 / p.fft_len as f64;
                re += x * w * ang.cos();
                im += x * w * ang.sin();
            }
            row[f] = re.hypot(im);
        }
    }
    out
}

/// Amplitude of the `freq_hz` component of `x` (an integer number of
/// cycles long) by projection; `freq_hz = 0` gives the mean magnitude.
pub fn tone_amplitude(x: &[f64], freq_hz: f64, fs: f64) -> f64 {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let ang = 2.0 * PI * freq_hz * i as f64 / fs;
        re += v * ang.cos();
        im += v * ang.sin();
    }
    let scale = if freq_hz == 0.0 { 1.0 } else { 2.0 };
    scale * re.hypot(im) / n
}

/// Energy of `x` in bins below `f_hz` by direct DFT.
pub fn band_energy_below(x: &[f64], f_hz: f64, fs: f64) -> f64 {
    let n = x.len();
    let k_max = (f_hz * n as f64 / fs).floor() as usize;
    (0..=k_max)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in x.iter().enumerate() {
                let ang = -2.0 * PI * (k * i) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re * re + im * im
        })
        .sum()
}

pub fn recording(mother_id: &str, fs: f64, z: &[f64]) -> SessionRecording {
    SessionRecording {
        metadata: SessionMetadata { mother_id: mother_id.into(), gestational_age_weeks: 30, ..Default::default() },
        sample_rate_hz: fs,
        samples: z
            .iter()
            .enumerate()
            .map(|(i, &v)| AccelSample { t: quantize(i as f64 / fs), ax: 0.0, ay: 0.0, az: quantize(v) })
            .collect(),
        annotations: Vec::new(),
    }
}

/// Noise-free corpus where every segment holds exactly one class: a decaying
/// 10-14 Hz burst (1), a 5-7 Hz tone modulated at 1 Hz (2) or a steady
/// 2-3 Hz tone (3).
pub fn toy_corpus(n_mothers: usize, per_class: usize, root: u64) -> Vec<CorpusSession> {
    let fs = 50.0;
    (0..n_mothers)
        .map(|m| {
            let mut rng = seed::rng(seed::indexed_seed(root, "toy", m as u64));
            let mut classes: Vec<Label> =
                Label::ALL.iter().flat_map(|&l| std::iter::repeat_n(l, per_class)).collect();
            classes.shuffle(&mut rng);
            let mut z = Vec::with_capacity(classes.len() * SEGMENT_LEN);
            let mut intervals = Vec::new();
            for (k, &class) in classes.iter().enumerate() {
                let t0 = (k * SEGMENT_LEN) as f64 / fs;
                let phase = rng.random_range(0.0..2.0 * PI);
                let gain = rng.random_range(0.8..1.2);
                let f = match class {
                    Label::Fetal => rng.random_range(10.0..14.0),
                    Label::Laugh => rng.random_range(5.0..7.0),
                    Label::Respiratory => rng.random_range(2.0..3.0),
                };
                for i in 0..SEGMENT_LEN {
                    let u = i as f64 / fs;
                    let env = match class {
                        Label::Fetal => (-u / 0.8).exp(),
                        Label::Laugh => 0.6 + 0.4 * (2.0 * PI * u).cos(),
                        Label::Respiratory => 1.0,
                    };
                    z.push(gain * env * (2.0 * PI * f * u + phase).sin());
                }
                if class != Label::Respiratory {
                    intervals.push(TruthInterval { t_start: quantize(t0 + 0.05), t_end: quantize(t0 + 3.95), class });
                }
            }
            CorpusSession {
                recording: recording(&format!("M{:02}", m + 1), fs, &z),
                truth: Some(GroundTruth::new(intervals).expect("disjoint toy intervals")),
            }
        })
        .collect()
}

/// Classifies a segment by looking up its span in the ground truth.
pub struct TruthClassifier<'a> {
    pub truth: &'a GroundTruth,
    pub fs: f64,
}

impl Classifier for TruthClassifier<'_> {
    fn classify(&self, segment: &Segment, _input: &Tensor) -> Result<Label> {
        let mut s = [segment.clone()];
        label_segments(&mut s, self.fs, LabelSource::Truth(self.truth), 0.0)?;
        Ok(s[0].label.expect("labeled"))
    }
}

/// Labels by checking each segment against each interval, half-open spans,
/// point intervals counted when they fall inside.
pub fn brute_labels(n_segments: usize, seg_s: f64, intervals: &[(f64, f64, Label)]) -> Vec<Label> {
    (0..n_segments)
        .map(|k| {
            let (a, b) = (k as f64 * seg_s, (k + 1) as f64 * seg_s);
            let hit = |class: Label| {
                intervals.iter().any(|&(s, e, c)| {
                    c == class && if s == e { a <= s && s < b } else { s.max(a) < e.min(b) }
                })
            };
            if hit(Label::Fetal) {
                Label::Fetal
            } else if hit(Label::Laugh) {
                Label::Laugh
            } else {
                Label::Respiratory
            }
        })
        .collect()
}

/// Largest relative difference between the analytic gradient and central
/// differences with step `h`. Pairs where both magnitudes are below `floor`
/// are compared absolutely.
pub fn gradient_check(model: &Model, batch: &[(&Tensor, Label)], h: f64, floor: f64) -> f64 {
    let analytic: Vec<f64> = model.grad(batch).unwrap().values().collect();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    let n_buffers = probe.parameter_buffers_mut().len();
    for b in 0..n_buffers {
        let len = probe.parameter_buffers_mut()[b].len();
        for i in 0..len {
            let orig = probe.parameter_buffers_mut()[b][i];
            probe.parameter_buffers_mut()[b][i] = orig + h;
            let up = probe.loss(batch).unwrap();
            probe.parameter_buffers_mut()[b][i] = orig - h;
            let down = probe.loss(batch).unwrap();
            probe.parameter_buffers_mut()[b][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[idx];
            let scale = a.abs().max(numeric.abs());
            let err = if scale < floor { (a - numeric).abs() } else { (a - numeric).abs() / scale };
            worst = worst.max(err);
            idx += 1;
        }
    }
    assert_eq!(idx, analytic.len());
    worst
}

pub const FS: f64 = 50.0;

/// 20 segments of low noise with 1.5 s bursts starting at the given times.
pub fn kick_session(onsets: &[f64]) -> (SessionRecording, GroundTruth) {
    let n = 20 * SEGMENT_LEN;
    let mut rng = seed::rng(1);
    let mut z: Vec<f64> = (0..n).map(|_| 0.001 * rng.random_range(-1.0..1.0)).collect();
    let mut intervals = Vec::new();
    for &t0 in onsets {
        let d = 1.5;
        for (i, v) in z.iter_mut().enumerate() {
            let u = i as f64 / FS - t0;
            if (0.0..=d).contains(&u) {
                *v += 0.05 * (-u / d).exp() * (2.0 * PI * 9.0 * u).sin();
            }
        }
        intervals.push(TruthInterval { t_start: t0, t_end: t0 + d, class: Label::Fetal });
    }
    (recording("K01", FS, &z), GroundTruth::new(intervals).unwrap())
}

pub fn segments_hit(truth: &GroundTruth) -> Vec<bool> {
    let seg_s = SEGMENT_LEN as f64 / FS;
    (0..20).map(|k| truth.intervals.iter().any(|iv| iv.t_start < (k + 1) as f64 * seg_s && k as f64 * seg_s < iv.t_end)).collect()
}

pub fn count_groups(hit: &[bool]) -> usize {
    std::iter::once(&false).chain(hit).collect::<Vec<_>>().windows(2).filter(|w| !*w[0] && *w[1]).count()
}


/// Zero biases put units whose inputs are all clipped exactly on the ReLU
/// kink, where central differences are meaningless, so jitter them.
pub fn with_random_biases(mut model: Model, s: u64) -> Model {
    let mut rng = seed::rng(s);
    for (i, buf) in model.parameter_buffers_mut().into_iter().enumerate() {
        if i % 2 == 1 {
            buf.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
    }
    model
}
