//! Parameter layering: built-in defaults, then a `key = value` config file,
//! then command-line flags.

use std::path::Path;

use fetalkick_core::dsp::{ImageMode, WindowKind};
use fetalkick_core::pipeline::{NetworkPreset, RunConfig};
use fetalkick_core::synth::SynthConfig;

use crate::CliError;

#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub seed: u64,
    pub run: RunConfig,
    pub synth: SynthConfig,
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{value}`")))
}

fn pair(key: &str, value: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = value
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("config key `{key}` expects `low,high`")))?;
    Ok((num(key, a.trim())?, num(key, b.trim())?))
}

pub fn parse_image_mode(s: &str) -> Result<ImageMode, CliError> {
    match s {
        "gray" | "log_gray" => Ok(ImageMode::LogGray),
        "rgb" | "log_rgb_replicate" => Ok(ImageMode::LogRgbReplicate),
        _ => Err(CliError::Usage(format!("image mode `{s}` is not gray or rgb"))),
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let p = &mut self.run.pipeline;
        let t = &mut self.run.train;
        let s = &mut self.synth;
        match key {
            "seed" => self.seed = num(key, value)?,
            "network" => {
                self.run.network = NetworkPreset::from_token(value)
                    .ok_or_else(|| CliError::Usage(format!("network `{value}` is not full or compact")))?
            }
            "learning_rate" => t.learning_rate = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "train_fraction" => t.train_fraction = num(key, value)?,
            "cutoff_hz" => p.cutoff_hz = num(key, value)?,
            "filter_taps" => p.filter_taps = num(key, value)?,
            "window_len" => p.stft.window_len = num(key, value)?,
            "hop" => p.stft.hop = num(key, value)?,
            "fft_len" => p.stft.fft_len = num(key, value)?,
            "window" => {
                p.stft.window = match value {
                    "hann" => WindowKind::Hann,
                    "hamming" => WindowKind::Hamming,
                    "rect" => WindowKind::Rect,
                    _ => return Err(CliError::Usage(format!("window `{value}` is not hann, hamming or rect"))),
                }
            }
            "rank" => p.nnmf.rank = num(key, value)?,
            "nnmf_max_iter" => p.nnmf.max_iter = num(key, value)?,
            "nnmf_tol" => p.nnmf.tol = num(key, value)?,
            "label_tol_s" => p.label_tol_s = num(key, value)?,
            "overlap_tol_s" => p.overlap_tol_s = num(key, value)?,
            "image_mode" => p.image_mode = parse_image_mode(value)?,
            "duration_s" => s.duration_s = num(key, value)?,
            "fs" => s.fs = num(key, value)?,
            "n_fetal" => s.n_fetal = num(key, value)?,
            "n_laugh" => s.n_laugh = num(key, value)?,
            "respiratory_freq_hz" => s.respiratory_freq_hz = num(key, value)?,
            "respiratory_amp" => s.respiratory_amp = num(key, value)?,
            "burst_freq_band_hz" => s.burst_freq_band_hz = pair(key, value)?,
            "burst_duration_s" => s.burst_duration_s = pair(key, value)?,
            "fetal_amp" => s.fetal_amp = num(key, value)?,
            "laugh_freq_band_hz" => s.laugh_freq_band_hz = pair(key, value)?,
            "laugh_duration_s" => s.laugh_duration_s = pair(key, value)?,
            "laugh_amp" => s.laugh_amp = num(key, value)?,
            "drift_amp" => s.drift_amp = num(key, value)?,
            "noise_sigma" => s.noise_sigma = num(key, value)?,
            "perception_rate" => s.perception_rate = num(key, value)?,
            "event_scale" => s.event_scale = num(key, value)?,
            "min_gap_s" => s.min_gap_s = num(key, value)?,
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Apply every `key = value` line; `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", n + 1)))?;
            let v = v.trim().trim_matches('"');
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn load(config: Option<&Path>) -> Result<Self, CliError> {
        let mut s = Settings::default();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            s.apply_config_text(&text)?;
        }
        Ok(s)
    }
}
