//! The four algorithm variants end to end: feature extraction, seeded
//! stratified split, training, held-out evaluation and kick counting.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnn::{train, ConvSpec, Example, Model, NetworkSpec, TrainConfig};
use crate::corpus::CorpusSession;
use crate::dsp::{
    apply_filter, design_highpass, label_segments, matrix_to_image, segment, to_image, ImageMode, LabelSource, Stft,
    StftParams,
};
use crate::dsp::segment::{Label, Segment, SEGMENT_LEN};
use crate::error::{Error, Result};
use crate::eval::{
    class_counts, confusion, overlap_table_sessions, per_mother_tpr, rates, EvalReport, OverlapInput, OverlapTable,
};
use crate::nnmf::{factorize, Factor, NnmfParams};
use crate::seed;
use crate::session::{extract_z, AnnotationKind, AnnotationSource, SessionRecording};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum AlgorithmId {
    /// Segment, STFT, CNN.
    Unfiltered = 1,
    /// High-pass filter, segment, STFT, CNN.
    Filtered = 2,
    /// As 2, then the NNMF basis W as CNN input.
    NnmfBasis = 3,
    /// As 2, then the NNMF abundance H as CNN input.
    NnmfAbundance = 4,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 4] =
        [AlgorithmId::Unfiltered, AlgorithmId::Filtered, AlgorithmId::NnmfBasis, AlgorithmId::NnmfAbundance];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn filtered(self) -> bool {
        self != AlgorithmId::Unfiltered
    }

    pub fn feature(self) -> FeatureKind {
        match self {
            AlgorithmId::Unfiltered | AlgorithmId::Filtered => FeatureKind::Spectrogram,
            AlgorithmId::NnmfBasis => FeatureKind::NnmfW,
            AlgorithmId::NnmfAbundance => FeatureKind::NnmfH,
        }
    }
}

impl TryFrom<u8> for AlgorithmId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(AlgorithmId::Unfiltered),
            2 => Ok(AlgorithmId::Filtered),
            3 => Ok(AlgorithmId::NnmfBasis),
            4 => Ok(AlgorithmId::NnmfAbundance),
            _ => Err(Error::InvalidParameter(format!("algorithm {v} is not one of 1, 2, 3, 4"))),
        }
    }
}

impl From<AlgorithmId> for u8 {
    fn from(a: AlgorithmId) -> u8 {
        a.number()
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "spect")]
    Spectrogram,
    #[serde(rename = "nnmf-w")]
    NnmfW,
    #[serde(rename = "nnmf-h")]
    NnmfH,
}

impl FeatureKind {
    pub fn token(self) -> &'static str {
        match self {
            FeatureKind::Spectrogram => "spect",
            FeatureKind::NnmfW => "nnmf-w",
            FeatureKind::NnmfH => "nnmf-h",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "spect" => Some(FeatureKind::Spectrogram),
            "nnmf-w" => Some(FeatureKind::NnmfW),
            "nnmf-h" => Some(FeatureKind::NnmfH),
            _ => None,
        }
    }

    /// `(height, width)` of the feature matrix for an `n_bins × n_frames`
    /// spectrogram.
    pub fn matrix_shape(self, n_bins: usize, n_frames: usize, rank: usize) -> (usize, usize) {
        match self {
            FeatureKind::Spectrogram => (n_bins, n_frames),
            FeatureKind::NnmfW => (n_bins, rank),
            FeatureKind::NnmfH => (rank, n_frames),
        }
    }
}

/// Signal-processing parameters shared by every algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub cutoff_hz: f64,
    pub filter_taps: usize,
    pub stft: StftParams,
    pub nnmf: NnmfParams,
    /// Half-width of the window around annotation events when no exact
    /// truth is available.
    pub label_tol_s: f64,
    pub overlap_tol_s: f64,
    pub image_mode: ImageMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cutoff_hz: 1.0,
            filter_taps: 101,
            stft: StftParams::default(),
            nnmf: NnmfParams::default(),
            label_tol_s: 1.0,
            overlap_tol_s: 2.0,
            image_mode: ImageMode::default(),
        }
    }
}

impl PipelineConfig {
    /// `(c, h, w)` of the CNN input for `feature`.
    pub fn input_shape(&self, feature: FeatureKind) -> (usize, usize, usize) {
        let (h, w) = feature.matrix_shape(self.stft.n_bins(), self.stft.n_frames(SEGMENT_LEN), self.nnmf.rank);
        (self.image_mode.channels(), h, w)
    }
}

/// Layer layouts; the kernel sizes are always 5×3, 5×2, 5×2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkPreset {
    /// 60/50/40 filters, 128 → 64 → 3 dense head.
    #[default]
    Full,
    /// 6/5/4 filters, 32 → 16 → 3 dense head.
    Compact,
}

impl NetworkPreset {
    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "full" => Some(NetworkPreset::Full),
            "compact" => Some(NetworkPreset::Compact),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            NetworkPreset::Full => "full",
            NetworkPreset::Compact => "compact",
        }
    }

    /// The layout for `input_shape`. When the kernels would collapse the
    /// height (short NNMF abundance features) they are used transposed.
    pub fn spec_for(self, input_shape: (usize, usize, usize)) -> Result<NetworkSpec> {
        let mut spec = NetworkSpec::table3(input_shape);
        if self == NetworkPreset::Compact {
            spec.conv_layers = vec![ConvSpec::new(5, 3, 6), ConvSpec::new(5, 2, 5), ConvSpec::new(5, 2, 4)];
            spec.dense_layers = vec![32, 16, 3];
        }
        if spec.conv_output_shapes().is_ok() {
            return Ok(spec);
        }
        let mut t = spec.clone();
        t.conv_layers = t.conv_layers.iter().map(|c| c.transposed()).collect();
        match t.conv_output_shapes() {
            Ok(_) => Ok(t),
            Err(_) => spec.conv_output_shapes().map(|_| spec),
        }
    }
}

/// Everything `run_algorithm` needs besides the corpus and seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub train: TrainConfig,
    pub network: NetworkPreset,
}

/// One classification unit with its CNN input.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSample {
    pub mother_id: String,
    pub gestational_age_weeks: u32,
    pub session: usize,
    pub segment: usize,
    pub t_start: f64,
    pub label: Option<Label>,
    pub input: Tensor,
}

/// Filter (optionally) and cut a recording into segments.
pub fn segment_recording(rec: &SessionRecording, filtered: bool, cfg: &PipelineConfig) -> Result<Vec<Segment>> {
    let (z, fs) = extract_z(rec);
    let signal = if filtered {
        let kernel = design_highpass(fs, cfg.cutoff_hz, cfg.filter_taps)?;
        apply_filter(&z, &kernel)?
    } else {
        z
    };
    segment(&signal, fs, rec.session_id())
}

/// Label with exact truth when present, else with the annotation stream.
pub fn label_session(segs: &mut [Segment], session: &CorpusSession, cfg: &PipelineConfig) -> Result<()> {
    let source = match &session.truth {
        Some(t) => LabelSource::Truth(t),
        None => LabelSource::Annotations(&session.recording.annotations),
    };
    label_segments(segs, session.recording.sample_rate_hz, source, cfg.label_tol_s)
}

fn nnmf_seed(root: u64, mother_id: &str, segment: usize) -> u64 {
    seed::indexed_seed(seed::sub_seed(root, &format!("{}/{mother_id}", seed::NNMF)), "segment", segment as u64)
}

/// CNN inputs of every segment for each requested feature, computed from one
/// spectrogram and (when needed) one factorization per segment.
fn segment_features(
    seg: &Segment,
    stft: &Stft,
    kinds: &[FeatureKind],
    cfg: &PipelineConfig,
    root_seed: u64,
) -> Result<Vec<Tensor>> {
    let sp = stft.compute(&seg.values, seg.t_start)?;
    let fp = if kinds.iter().any(|k| *k != FeatureKind::Spectrogram) {
        Some(factorize(&sp.magnitudes, &cfg.nnmf, nnmf_seed(root_seed, &seg.mother_id, seg.index))?)
    } else {
        None
    };
    Ok(kinds
        .iter()
        .map(|k| match (k, &fp) {
            (FeatureKind::NnmfW, Some(fp)) => matrix_to_image(crate::nnmf::feature_of(fp, Factor::W), cfg.image_mode),
            (FeatureKind::NnmfH, Some(fp)) => matrix_to_image(crate::nnmf::feature_of(fp, Factor::H), cfg.image_mode),
            _ => to_image(&sp, cfg.image_mode),
        })
        .collect())
}

/// Features of a single, possibly unlabeled, recording.
pub fn recording_features(
    rec: &SessionRecording,
    algo: AlgorithmId,
    cfg: &PipelineConfig,
    root_seed: u64,
) -> Result<(Vec<Segment>, Vec<Tensor>)> {
    recording_features_with(rec, algo.filtered(), algo.feature(), cfg, root_seed)
}

/// As [`recording_features`] with the filter and feature chosen freely.
pub fn recording_features_with(
    rec: &SessionRecording,
    filtered: bool,
    feature: FeatureKind,
    cfg: &PipelineConfig,
    root_seed: u64,
) -> Result<(Vec<Segment>, Vec<Tensor>)> {
    let segs = segment_recording(rec, filtered, cfg)?;
    let stft = Stft::new(cfg.stft, rec.sample_rate_hz)?;
    let feats = segs
        .par_iter()
        .map(|s| segment_features(s, &stft, &[feature], cfg, root_seed).map(|mut v| v.remove(0)))
        .collect::<Result<Vec<_>>>()?;
    Ok((segs, feats))
}

/// Labeled features for several algorithms at once. Algorithms that share
/// a filter setting share the spectrogram and factorization work.
pub fn extract_features(
    corpus: &[CorpusSession],
    algos: &[AlgorithmId],
    cfg: &PipelineConfig,
    root_seed: u64,
) -> Result<BTreeMap<AlgorithmId, Vec<FeatureSample>>> {
    let mut out: BTreeMap<AlgorithmId, Vec<FeatureSample>> = BTreeMap::new();
    for filtered in [false, true] {
        let group: Vec<AlgorithmId> = algos.iter().copied().filter(|a| a.filtered() == filtered).collect();
        if group.is_empty() {
            continue;
        }
        let kinds: Vec<FeatureKind> = group.iter().map(|a| a.feature()).collect();
        for (si, session) in corpus.iter().enumerate() {
            let rec = &session.recording;
            let mut segs = segment_recording(rec, filtered, cfg)?;
            label_session(&mut segs, session, cfg)?;
            let stft = Stft::new(cfg.stft, rec.sample_rate_hz)?;
            let feats = segs
                .par_iter()
                .map(|s| segment_features(s, &stft, &kinds, cfg, root_seed))
                .collect::<Result<Vec<_>>>()?;
            for (seg, tensors) in segs.iter().zip(feats) {
                for (algo, input) in group.iter().zip(tensors) {
                    out.entry(*algo).or_default().push(FeatureSample {
                        mother_id: rec.session_id().to_string(),
                        gestational_age_weeks: rec.metadata.gestational_age_weeks,
                        session: si,
                        segment: seg.index,
                        t_start: seg.t_start,
                        label: seg.label,
                        input,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Stratified split of `labels` into train and test index sets. Each class
/// contributes `round(fraction · n)` training items, clamped so both sides
/// get at least one.
pub fn split_indices(labels: &[Label], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in Label::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::Data(format!(
                "class {} has {} segments; at least 2 are needed to split",
                class.index(),
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_train = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified split of labeled segments.
pub fn split_train_test(segments: &[Segment], fraction: f64, seed: u64) -> Result<(Vec<Segment>, Vec<Segment>)> {
    let labels = segments
        .iter()
        .map(|s| s.label.ok_or_else(|| Error::Data(format!("segment {} of {} is unlabeled", s.index, s.mother_id))))
        .collect::<Result<Vec<_>>>()?;
    let (tr, te) = split_indices(&labels, fraction, seed)?;
    Ok((tr.iter().map(|&i| segments[i].clone()).collect(), te.iter().map(|&i| segments[i].clone()).collect()))
}

/// Model metadata keys written by this module.
pub mod meta {
    pub const ALGORITHM: &str = "algorithm";
    pub const FEATURE: &str = "feature";
    pub const PIPELINE: &str = "pipeline";
    pub const NNMF_SEED: &str = "nnmf_seed";
}

fn stamp_model(model: &mut Model, algo: AlgorithmId, cfg: &PipelineConfig, root_seed: u64) -> Result<()> {
    model.metadata.insert(meta::ALGORITHM.into(), algo.to_string());
    model.metadata.insert(meta::FEATURE.into(), algo.feature().token().into());
    model.metadata.insert(meta::PIPELINE.into(), serde_json::to_string(cfg)?);
    model.metadata.insert(meta::NNMF_SEED.into(), root_seed.to_string());
    Ok(())
}

/// Algorithm, pipeline parameters and NNMF seed a model was trained with,
/// after checking that its input shape matches that pipeline.
pub fn model_pipeline(model: &Model) -> Result<(AlgorithmId, PipelineConfig, u64)> {
    let get = |k: &str| model.metadata.get(k).ok_or_else(|| Error::Model(format!("model metadata lacks `{k}`")));
    let algo: u8 = get(meta::ALGORITHM)?.parse().map_err(|_| Error::Model("bad algorithm in model metadata".into()))?;
    let algo = AlgorithmId::try_from(algo).map_err(|e| Error::Model(e.to_string()))?;
    let cfg: PipelineConfig = serde_json::from_str(get(meta::PIPELINE)?)
        .map_err(|e| Error::Model(format!("bad pipeline in model metadata: {e}")))?;
    let nnmf_seed: u64 = get(meta::NNMF_SEED)?.parse().map_err(|_| Error::Model("bad nnmf seed in model metadata".into()))?;
    check_input_shape(model, algo, &cfg)?;
    Ok((algo, cfg, nnmf_seed))
}

pub fn check_input_shape(model: &Model, algo: AlgorithmId, cfg: &PipelineConfig) -> Result<()> {
    let want = cfg.input_shape(algo.feature());
    if model.spec.input_shape != want {
        return Err(Error::Shape(format!(
            "model expects input {:?} but algorithm {algo} ({}) produces {:?}",
            model.spec.input_shape,
            algo.feature().token(),
            want
        )));
    }
    Ok(())
}

fn labeled(samples: &[FeatureSample]) -> Result<Vec<Label>> {
    samples
        .iter()
        .map(|s| {
            s.label.ok_or_else(|| Error::Data(format!("segment {} of {} is unlabeled", s.segment, s.mother_id)))
        })
        .collect()
}

/// Train a freshly initialized network on every labeled sample.
pub fn train_on(
    algo: AlgorithmId,
    samples: &[FeatureSample],
    cfg: &RunConfig,
    root_seed: u64,
) -> Result<Model> {
    let labels = labeled(samples)?;
    let examples: Vec<Example> =
        samples.iter().zip(&labels).map(|(s, &label)| Example { input: s.input.clone(), label }).collect();
    fit(algo, &examples, cfg, root_seed)
}

fn fit(algo: AlgorithmId, examples: &[Example], cfg: &RunConfig, root_seed: u64) -> Result<Model> {
    let spec = cfg.network.spec_for(cfg.pipeline.input_shape(algo.feature()))?;
    let model = Model::init(spec, seed::sub_seed(root_seed, seed::INIT))?;
    let tc = TrainConfig { seed: root_seed, ..cfg.train };
    let mut model = train(model, examples, &tc)?;
    stamp_model(&mut model, algo, &cfg.pipeline, root_seed)?;
    Ok(model)
}

/// Split, train and evaluate on precomputed features for `algo`.
pub fn evaluate_features(
    algo: AlgorithmId,
    corpus: &[CorpusSession],
    samples: &[FeatureSample],
    cfg: &RunConfig,
    root_seed: u64,
) -> Result<(Model, EvalReport)> {
    let labels = labeled(samples)?;
    let (train_idx, test_idx) = split_indices(&labels, cfg.train.train_fraction, seed::sub_seed(root_seed, seed::SPLIT))?;
    let examples: Vec<Example> =
        train_idx.iter().map(|&i| Example { input: samples[i].input.clone(), label: labels[i] }).collect();
    let model = fit(algo, &examples, cfg, root_seed)?;

    let all_preds = samples.par_iter().map(|s| model.predict(&s.input)).collect::<Result<Vec<_>>>()?;
    let test_preds: Vec<Label> = test_idx.iter().map(|&i| all_preds[i]).collect();
    let test_labels: Vec<Label> = test_idx.iter().map(|&i| labels[i]).collect();
    let cm = confusion(&test_preds, &test_labels)?;
    let r = rates(&cm)?;
    let per_mother = per_mother_tpr(test_idx.iter().map(|&i| (samples[i].mother_id.as_str(), labels[i], all_preds[i])));
    let overlap = device_overlap(corpus, samples, &all_preds, cfg.pipeline.overlap_tol_s)?;
    let corpus_stats = class_counts(samples.iter().zip(&labels).map(|(s, &l)| (s.gestational_age_weeks, l)));
    let report = EvalReport {
        algorithm: algo.number(),
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        confusion: cm,
        tpr: r.tpr,
        fpr: r.fpr,
        macro_tpr: r.macro_tpr(),
        per_mother,
        overlap,
        corpus: corpus_stats,
    };
    Ok((model, report))
}

/// Ultrasound events against device detections (merged class-1 runs over
/// all segments of each session) and mother button presses.
fn device_overlap(
    corpus: &[CorpusSession],
    samples: &[FeatureSample],
    preds: &[Label],
    tol_s: f64,
) -> Result<OverlapTable> {
    let mut per_session: Vec<(Vec<f64>, Vec<(f64, f64)>, Vec<f64>)> = Vec::with_capacity(corpus.len());
    for (si, session) in corpus.iter().enumerate() {
        let rec = &session.recording;
        let seg_len = SEGMENT_LEN as f64 / rec.sample_rate_hz;
        let (starts, classes): (Vec<f64>, Vec<Label>) = samples
            .iter()
            .zip(preds)
            .filter(|(s, _)| s.session == si)
            .map(|(s, p)| (s.t_start, *p))
            .unzip();
        let device = movement_runs(&starts, &classes, seg_len);
        let events = |src: AnnotationSource, kind: AnnotationKind| -> Vec<f64> {
            rec.annotations.iter().filter(|e| e.source == src && e.kind == kind).map(|e| e.t).collect()
        };
        per_session.push((
            events(AnnotationSource::Ultrasound, AnnotationKind::FetalMovement),
            device,
            events(AnnotationSource::MotherButton, AnnotationKind::FetalMovement),
        ));
    }
    let inputs: Vec<OverlapInput<'_>> = per_session
        .iter()
        .map(|(u, d, m)| OverlapInput { ultrasound: u, device: d, mother: m })
        .collect();
    overlap_table_sessions(&inputs, tol_s)
}

/// Extract features for `algo`, then split, train and evaluate.
pub fn run_algorithm(
    algo: AlgorithmId,
    corpus: &[CorpusSession],
    cfg: &RunConfig,
    root_seed: u64,
) -> Result<(Model, EvalReport)> {
    let feats = extract_features(corpus, &[algo], &cfg.pipeline, root_seed)?;
    let samples = feats.get(&algo).map(Vec::as_slice).unwrap_or_default();
    evaluate_features(algo, corpus, samples, cfg, root_seed)
}

/// Anything that can assign a class to a segment given its features.
pub trait Classifier {
    fn classify(&self, segment: &Segment, input: &Tensor) -> Result<Label>;
}

impl Classifier for Model {
    fn classify(&self, _segment: &Segment, input: &Tensor) -> Result<Label> {
        self.predict(input)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickReport {
    pub session_id: String,
    pub movement_count: usize,
    pub movements: Vec<Movement>,
    /// Predicted class of each segment in time order.
    pub classes: Vec<Label>,
}

impl KickReport {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

/// Maximal runs of consecutive class-1 segments as `(t_start, t_end)`.
pub fn movement_runs(t_starts: &[f64], classes: &[Label], seg_len_s: f64) -> Vec<(f64, f64)> {
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut open = false;
    for (&t, &c) in t_starts.iter().zip(classes) {
        if c == Label::Fetal {
            match runs.last_mut() {
                Some(last) if open => last.1 = t + seg_len_s,
                _ => runs.push((t, t + seg_len_s)),
            }
            open = true;
        } else {
            open = false;
        }
    }
    runs
}

/// Full chain on one recording with any classifier.
pub fn analyze_with(
    classifier: &impl Classifier,
    rec: &SessionRecording,
    algo: AlgorithmId,
    cfg: &PipelineConfig,
    root_seed: u64,
) -> Result<KickReport> {
    let (segs, feats) = recording_features(rec, algo, cfg, root_seed)?;
    let classes = segs.iter().zip(&feats).map(|(s, x)| classifier.classify(s, x)).collect::<Result<Vec<_>>>()?;
    let starts: Vec<f64> = segs.iter().map(|s| s.t_start).collect();
    let runs = movement_runs(&starts, &classes, SEGMENT_LEN as f64 / rec.sample_rate_hz);
    Ok(KickReport {
        session_id: rec.session_id().to_string(),
        movement_count: runs.len(),
        movements: runs.into_iter().map(|(t_start, t_end)| Movement { t_start, t_end }).collect(),
        classes,
    })
}

/// Count kicks in a recording with a trained model, using the pipeline the
/// model was trained with.
pub fn analyze_session(model: &Model, rec: &SessionRecording) -> Result<KickReport> {
    let (algo, cfg, nnmf_seed) = model_pipeline(model)?;
    analyze_with(model, rec, algo, &cfg, nnmf_seed)
}
