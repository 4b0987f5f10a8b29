//! Seeded synthetic sessions with exact ground truth.
//!
//! The Z channel is the sum of a band-limited random drift (≤ 0.05 Hz), a
//! respiratory sinusoid, white Gaussian noise, exponentially damped bursts
//! for fetal movements and amplitude-modulated oscillations for maternal
//! laughs. Event waveform shapes and default amplitudes are modelling
//! choices; the signal-to-noise ratio in particular is a free parameter.
//!
//! The random stream is consumed in an order that does not depend on any
//! amplitude, so zeroing an amplitude leaves every other component intact.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::segment::Label;
use crate::error::{Error, Result};
use crate::seed;
use crate::session::{
    quantize, AccelSample, AnnotationEvent, AnnotationKind, AnnotationSource, FetalGender, SessionMetadata,
    SessionRecording,
};
use crate::truth::{GroundTruth, TruthInterval};

const DRIFT_COMPONENTS: usize = 6;
const DRIFT_MAX_HZ: f64 = 0.05;
const BURST_ATTACK_S: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub duration_s: f64,
    pub fs: f64,
    pub n_fetal: usize,
    pub n_laugh: usize,
    pub respiratory_freq_hz: f64,
    pub respiratory_amp: f64,
    pub burst_freq_band_hz: (f64, f64),
    pub burst_duration_s: (f64, f64),
    pub fetal_amp: f64,
    pub laugh_freq_band_hz: (f64, f64),
    pub laugh_duration_s: (f64, f64),
    pub laugh_amp: f64,
    pub drift_amp: f64,
    pub noise_sigma: f64,
    /// Probability that the mother presses the button for a fetal event.
    pub perception_rate: f64,
    /// Multiplies both event amplitudes (e.g. attenuation in breech presentation).
    pub event_scale: f64,
    /// Minimum spacing between event supports and from the session edges.
    pub min_gap_s: f64,
    pub metadata: SessionMetadata,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            duration_s: 1200.0,
            fs: 50.0,
            n_fetal: 90,
            n_laugh: 18,
            respiratory_freq_hz: 0.3,
            respiratory_amp: 0.05,
            burst_freq_band_hz: (5.0, 15.0),
            burst_duration_s: (0.5, 2.0),
            fetal_amp: 0.05,
            laugh_freq_band_hz: (3.0, 6.0),
            laugh_duration_s: (2.0, 5.0),
            laugh_amp: 0.04,
            drift_amp: 0.1,
            noise_sigma: 0.0015,
            perception_rate: 0.8,
            event_scale: 1.0,
            min_gap_s: 0.5,
            metadata: SessionMetadata::default(),
            seed: 0,
        }
    }
}

fn band_ok(b: (f64, f64)) -> bool {
    b.0 > 0.0 && b.1 >= b.0 && b.1.is_finite()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.duration_s > 0.0 && self.fs > 0.0) {
            return bad("duration and sample rate must be positive".into());
        }
        for (name, b) in [
            ("burst band", self.burst_freq_band_hz),
            ("laugh band", self.laugh_freq_band_hz),
            ("burst duration", self.burst_duration_s),
            ("laugh duration", self.laugh_duration_s),
        ] {
            if !band_ok(b) {
                return bad(format!("{name} {b:?} must satisfy 0 < low ≤ high"));
            }
        }
        if self.fs <= 2.0 * self.burst_freq_band_hz.1 || self.fs <= 2.0 * self.laugh_freq_band_hz.1 {
            return bad(format!("fs {} Hz is below Nyquist for the event bands", self.fs));
        }
        if !(0.2..=0.4).contains(&self.respiratory_freq_hz) {
            return bad(format!("respiratory frequency {} Hz outside [0.2, 0.4]", self.respiratory_freq_hz));
        }
        for (name, v) in [
            ("respiratory_amp", self.respiratory_amp),
            ("fetal_amp", self.fetal_amp),
            ("laugh_amp", self.laugh_amp),
            ("drift_amp", self.drift_amp),
            ("noise_sigma", self.noise_sigma),
            ("event_scale", self.event_scale),
            ("min_gap_s", self.min_gap_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.perception_rate) {
            return bad(format!("perception rate {} outside [0, 1]", self.perception_rate));
        }
        self.metadata.validate()
    }
}

#[derive(Clone, Copy, Debug)]
struct EventDraw {
    class: Label,
    duration: f64,
    freq: f64,
    phase: f64,
    gain: f64,
    mod_freq: f64,
    mod_phase: f64,
}

fn burst_envelope(u: f64, duration: f64) -> f64 {
    let tau = duration / 1.2;
    let attack = if u < BURST_ATTACK_S { 0.5 - 0.5 * (PI * u / BURST_ATTACK_S).cos() } else { 1.0 };
    let fade_start = 0.9 * duration;
    let fade = if u > fade_start { 0.5 + 0.5 * (PI * (u - fade_start) / (duration - fade_start)).cos() } else { 1.0 };
    attack * (-u / tau).exp() * fade
}

/// Tukey taper with 30 % cosine edges.
fn tukey(u: f64, duration: f64) -> f64 {
    let edge = 0.15 * duration;
    if u < edge {
        0.5 - 0.5 * (PI * u / edge).cos()
    } else if u > duration - edge {
        0.5 - 0.5 * (PI * (duration - u) / edge).cos()
    } else {
        1.0
    }
}

impl EventDraw {
    /// Unit-amplitude waveform at offset `u` seconds from onset.
    fn shape(&self, u: f64) -> f64 {
        if !(0.0..=self.duration).contains(&u) {
            return 0.0;
        }
        let carrier = (2.0 * PI * self.freq * u + self.phase).sin();
        let env = match self.class {
            Label::Fetal => burst_envelope(u, self.duration),
            _ => tukey(u, self.duration) * (0.65 + 0.35 * (2.0 * PI * self.mod_freq * u + self.mod_phase).cos()),
        };
        self.gain * env * carrier
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// One synthetic session and its event intervals.
pub fn generate_session(cfg: &SynthConfig) -> Result<(SessionRecording, GroundTruth)> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed);
    let n = (cfg.duration_s * cfg.fs).round() as usize;
    if n < 2 {
        return Err(Error::InvalidParameter("session shorter than two samples".into()));
    }
    let span = (n - 1) as f64 / cfg.fs;

    let mut events: Vec<EventDraw> = Vec::with_capacity(cfg.n_fetal + cfg.n_laugh);
    for class in std::iter::repeat_n(Label::Fetal, cfg.n_fetal).chain(std::iter::repeat_n(Label::Laugh, cfg.n_laugh)) {
        let (dur, band) = match class {
            Label::Fetal => (cfg.burst_duration_s, cfg.burst_freq_band_hz),
            _ => (cfg.laugh_duration_s, cfg.laugh_freq_band_hz),
        };
        events.push(EventDraw {
            class,
            duration: uniform(&mut rng, dur),
            freq: uniform(&mut rng, band),
            phase: rng.random_range(0.0..2.0 * PI),
            gain: rng.random_range(0.7..1.3),
            mod_freq: rng.random_range(1.0..2.0),
            mod_phase: rng.random_range(0.0..2.0 * PI),
        });
    }
    events.shuffle(&mut rng);

    let busy: f64 = events.iter().map(|e| e.duration).sum::<f64>() + cfg.min_gap_s * (events.len() + 1) as f64;
    let slack = span - busy;
    if slack < 0.0 {
        return Err(Error::Data(format!(
            "cannot pack {} fetal and {} laugh events into {span:.1} s (need {busy:.1} s)",
            cfg.n_fetal, cfg.n_laugh
        )));
    }
    let weights: Vec<f64> = (0..=events.len()).map(|_| Exp1.sample(&mut rng)).collect();
    let weight_sum: f64 = weights.iter().sum();
    let mut onsets = Vec::with_capacity(events.len());
    let mut cursor = 0.0;
    for (ev, w) in events.iter().zip(&weights) {
        cursor += cfg.min_gap_s + slack * w / weight_sum;
        let onset = quantize(cursor);
        onsets.push(onset);
        cursor = onset + ev.duration;
    }

    let drift: Vec<(f64, f64, f64)> = (0..DRIFT_COMPONENTS)
        .map(|_| {
            let f = rng.random_range(0.1 * DRIFT_MAX_HZ..=DRIFT_MAX_HZ);
            (f, rng.random_range(0.0..2.0 * PI), rng.random_range(0.5..1.0))
        })
        .collect();
    let drift_norm = (drift.iter().map(|d| d.2 * d.2).sum::<f64>() / 2.0).sqrt();
    let resp_phase = rng.random_range(0.0..2.0 * PI);

    let mut z = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut ay = vec![0.0; n];
    for i in 0..n {
        let t = i as f64 / cfg.fs;
        let d: f64 = drift.iter().map(|&(f, p, a)| a * (2.0 * PI * f * t + p).sin()).sum();
        let resp = (2.0 * PI * cfg.respiratory_freq_hz * t + resp_phase).sin();
        let nz: f64 = StandardNormal.sample(&mut rng);
        let nx: f64 = StandardNormal.sample(&mut rng);
        let ny: f64 = StandardNormal.sample(&mut rng);
        z[i] = cfg.drift_amp * d / drift_norm + cfg.respiratory_amp * resp + cfg.noise_sigma * nz;
        ax[i] = 0.2 * cfg.respiratory_amp * resp + cfg.noise_sigma * nx;
        ay[i] = 0.1 * cfg.respiratory_amp * resp + cfg.noise_sigma * ny;
    }

    let mut intervals = Vec::with_capacity(events.len());
    let mut annotations = Vec::new();
    for (ev, &onset) in events.iter().zip(&onsets) {
        let amp = cfg.event_scale
            * match ev.class {
                Label::Fetal => cfg.fetal_amp,
                _ => cfg.laugh_amp,
            };
        let first = (onset * cfg.fs).ceil() as usize;
        let last = (((onset + ev.duration) * cfg.fs).floor() as usize).min(n - 1);
        for i in first..=last {
            let v = amp * ev.shape(i as f64 / cfg.fs - onset);
            z[i] += v;
            ax[i] += 0.3 * v;
            ay[i] += 0.2 * v;
        }
        intervals.push(TruthInterval { t_start: onset, t_end: quantize(onset + ev.duration), class: ev.class });
        match ev.class {
            Label::Fetal => {
                annotations.push(AnnotationEvent {
                    t: onset,
                    source: AnnotationSource::Ultrasound,
                    kind: AnnotationKind::FetalMovement,
                });
                let felt = rng.random::<f64>() < cfg.perception_rate;
                let offset = rng.random_range(-1.0..=1.0);
                if felt {
                    annotations.push(AnnotationEvent {
                        t: quantize((onset + offset).clamp(0.0, span)),
                        source: AnnotationSource::MotherButton,
                        kind: AnnotationKind::FetalMovement,
                    });
                }
            }
            _ => annotations.push(AnnotationEvent {
                t: onset,
                source: AnnotationSource::MaternalMovementButton,
                kind: AnnotationKind::MaternalLaugh,
            }),
        }
    }
    annotations.sort_by(|a, b| a.t.total_cmp(&b.t));

    let samples = (0..n)
        .map(|i| AccelSample { t: quantize(i as f64 / cfg.fs), ax: quantize(ax[i]), ay: quantize(ay[i]), az: quantize(z[i]) })
        .collect();
    let rec = SessionRecording { metadata: cfg.metadata.clone(), sample_rate_hz: cfg.fs, samples, annotations };
    Ok((rec, GroundTruth::new(intervals)?))
}

/// Sessions for `n_mothers` mothers with per-mother jittered parameters.
pub fn generate_corpus(
    n_mothers: usize,
    template: &SynthConfig,
    seed: u64,
) -> Result<Vec<(SessionRecording, GroundTruth)>> {
    if n_mothers == 0 {
        return Err(Error::InvalidParameter("corpus needs at least one mother".into()));
    }
    (0..n_mothers)
        .map(|i| {
            let mut rng = seed::rng(seed::indexed_seed(seed, "mother", i as u64));
            let mut cfg = template.clone();
            cfg.respiratory_freq_hz = rng.random_range(0.2..=0.4);
            cfg.respiratory_amp *= rng.random_range(0.7..1.3);
            cfg.fetal_amp *= rng.random_range(0.8..1.2);
            cfg.laugh_amp *= rng.random_range(0.8..1.2);
            cfg.drift_amp *= rng.random_range(0.5..1.5);
            let jitter = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| (k as f64 * rng.random_range(0.9..1.1)).round() as usize;
            cfg.n_fetal = jitter(&mut rng, template.n_fetal);
            cfg.n_laugh = jitter(&mut rng, template.n_laugh);
            cfg.metadata = SessionMetadata {
                mother_id: format!("M{:02}", i + 1),
                maternal_age: rng.random_range(20..=38),
                gestational_age_weeks: rng.random_range(27..=41),
                fetal_gender: [FetalGender::Male, FetalGender::Female, FetalGender::Unstated][rng.random_range(0..3)],
                parity: rng.random_range(0..=3),
                notes: String::new(),
            };
            cfg.seed = seed::indexed_seed(seed, seed::SYNTH, i as u64);
            generate_session(&cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::{extract_z, parse_session, write_session};

    fn short() -> SynthConfig {
        SynthConfig { duration_s: 120.0, n_fetal: 9, n_laugh: 2, seed: 5, ..Default::default() }
    }

    #[test]
    fn pure_respiration_without_events_or_noise() {
        let cfg = SynthConfig { n_fetal: 0, n_laugh: 0, noise_sigma: 0.0, drift_amp: 0.0, ..short() };
        let (rec, truth) = generate_session(&cfg).unwrap();
        assert!(truth.intervals.is_empty());
        let (z, fs) = extract_z(&rec);
        let amp = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((amp - cfg.respiratory_amp).abs() < 1e-5);
        // A pure sinusoid satisfies x[i+1] + x[i-1] = 2 cos(ω) x[i].
        let c = 2.0 * (2.0 * PI * cfg.respiratory_freq_hz / fs).cos();
        for i in 1..z.len() - 1 {
            assert!((z[i + 1] + z[i - 1] - c * z[i]).abs() < 3e-6, "sample {i}");
        }
    }

    #[test]
    fn identical_config_identical_bytes() {
        let (a, ta) = generate_session(&short()).unwrap();
        let (b, tb) = generate_session(&short()).unwrap();
        assert_eq!(write_session(&a), write_session(&b));
        assert_eq!(ta, tb);
        let (c, _) = generate_session(&SynthConfig { seed: 6, ..short() }).unwrap();
        assert_ne!(write_session(&a), write_session(&c));
    }

    #[test]
    fn output_is_a_valid_round_trippable_recording() {
        let (rec, truth) = generate_session(&short()).unwrap();
        rec.validate().unwrap();
        assert_eq!(rec.samples.len(), 6000);
        assert_eq!(truth.intervals.len(), 11);
        let bytes = write_session(&rec);
        let back = parse_session(&bytes).unwrap();
        assert_eq!(back, rec);
        assert_eq!(write_session(&back), bytes);
    }

    #[test]
    fn intervals_are_disjoint_and_inside_the_session() {
        let (rec, truth) = generate_session(&short()).unwrap();
        let end = rec.samples.last().unwrap().t;
        for w in truth.intervals.windows(2) {
            assert!(w[0].t_end <= w[1].t_start);
        }
        assert!(truth.intervals.iter().all(|iv| iv.t_start >= 0.0 && iv.t_end <= end));
    }

    #[test]
    fn annotations_follow_events() {
        let (rec, truth) = generate_session(&SynthConfig { perception_rate: 1.0, ..short() }).unwrap();
        let us: Vec<f64> =
            rec.annotations.iter().filter(|a| a.source == AnnotationSource::Ultrasound).map(|a| a.t).collect();
        let fetal: Vec<f64> = truth.of_class(Label::Fetal).map(|iv| iv.t_start).collect();
        assert_eq!(us, fetal);
        let mb: Vec<f64> =
            rec.annotations.iter().filter(|a| a.source == AnnotationSource::MotherButton).map(|a| a.t).collect();
        assert_eq!(mb.len(), fetal.len());
        for t in fetal {
            assert!(mb.iter().any(|m| (m - t).abs() <= 1.0 + 1e-6));
        }
    }

    #[test]
    fn infeasible_packing_is_reported() {
        let cfg = SynthConfig { duration_s: 30.0, n_fetal: 40, ..short() };
        assert!(matches!(generate_session(&cfg), Err(Error::Data(_))));
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            SynthConfig { fs: 20.0, ..short() },
            SynthConfig { respiratory_freq_hz: 0.5, ..short() },
            SynthConfig { noise_sigma: -1.0, ..short() },
            SynthConfig { perception_rate: 1.5, ..short() },
        ] {
            assert!(matches!(generate_session(&cfg), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn corpus_has_one_session_per_mother() {
        let c = generate_corpus(2, &short(), 1).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].0.metadata.mother_id, "M01");
        assert_eq!(c[1].0.metadata.mother_id, "M02");
        assert!(generate_corpus(0, &short(), 1).is_err());
    }
}
