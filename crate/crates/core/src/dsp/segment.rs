//! Fixed-width, non-overlapping segmentation and segment labeling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::{AnnotationEvent, AnnotationKind, AnnotationSource};
use crate::truth::GroundTruth;

/// Samples per segment.
pub const SEGMENT_LEN: usize = 200;

/// The three segment classes. Serialized as the class number 1, 2 or 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Fetal,
    Laugh,
    Respiratory,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Fetal, Label::Laugh, Label::Respiratory];

    /// Class number, 1..=3.
    pub fn index(self) -> u8 {
        match self {
            Label::Fetal => 1,
            Label::Laugh => 2,
            Label::Respiratory => 3,
        }
    }

    /// Zero-based position, for matrix indexing.
    pub fn ordinal(self) -> usize {
        usize::from(self.index() - 1)
    }

    pub fn from_ordinal(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.index()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Fetal),
            2 => Ok(Label::Laugh),
            3 => Ok(Label::Respiratory),
            other => Err(format!("class {other} outside 1..=3")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub index: usize,
    pub values: Vec<f64>,
    pub t_start: f64,
    pub label: Option<Label>,
    pub mother_id: String,
}

impl Segment {
    pub fn duration(&self, fs: f64) -> f64 {
        self.values.len() as f64 / fs
    }
}

/// Split into consecutive 200-sample segments; a trailing remainder is dropped.
pub fn segment(signal: &[f64], fs: f64, mother_id: &str) -> Result<Vec<Segment>> {
    if signal.len() < SEGMENT_LEN {
        return Err(Error::Data(format!(
            "signal of {} samples is shorter than one {SEGMENT_LEN}-sample segment",
            signal.len()
        )));
    }
    Ok(signal
        .chunks_exact(SEGMENT_LEN)
        .enumerate()
        .map(|(index, chunk)| Segment {
            index,
            values: chunk.to_vec(),
            t_start: (SEGMENT_LEN * index) as f64 / fs,
            label: None,
            mother_id: mother_id.to_string(),
        })
        .collect())
}

/// Where segment labels come from.
#[derive(Clone, Copy, Debug)]
pub enum LabelSource<'a> {
    /// Exact event intervals.
    Truth(&'a GroundTruth),
    /// Ultrasound fetal-movement events and maternal laugh button presses,
    /// each widened to `t ± tol_s`.
    Annotations(&'a [AnnotationEvent]),
}

fn intersects(seg_start: f64, seg_end: f64, a: f64, b: f64) -> bool {
    if a == b {
        seg_start <= a && a < seg_end
    } else {
        a < seg_end && seg_start < b
    }
}

/// Class 1 if any fetal interval touches the segment span `[t, t + 200/fs)`,
/// else class 2 if a laugh interval does, else class 3.
pub fn label_segments(segs: &mut [Segment], fs: f64, source: LabelSource<'_>, tol_s: f64) -> Result<()> {
    if !(tol_s >= 0.0) {
        return Err(Error::InvalidParameter(format!("label tolerance {tol_s} s must be non-negative")));
    }
    let mut fetal = Vec::new();
    let mut laugh = Vec::new();
    match source {
        LabelSource::Truth(truth) => {
            for iv in &truth.intervals {
                match iv.class {
                    Label::Fetal => fetal.push((iv.t_start, iv.t_end)),
                    Label::Laugh => laugh.push((iv.t_start, iv.t_end)),
                    Label::Respiratory => {}
                }
            }
        }
        LabelSource::Annotations(events) => {
            for ev in events {
                let span = (ev.t - tol_s, ev.t + tol_s);
                match (ev.source, ev.kind) {
                    (AnnotationSource::Ultrasound, AnnotationKind::FetalMovement) => fetal.push(span),
                    (AnnotationSource::MaternalMovementButton, AnnotationKind::MaternalLaugh) => laugh.push(span),
                    _ => {}
                }
            }
        }
    }
    for seg in segs.iter_mut() {
        let start = seg.t_start;
        let end = start + seg.duration(fs);
        let hit = |ivs: &[(f64, f64)]| ivs.iter().any(|&(a, b)| intersects(start, end, a, b));
        seg.label = Some(if hit(&fetal) {
            Label::Fetal
        } else if hit(&laugh) {
            Label::Laugh
        } else {
            Label::Respiratory
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::TruthInterval;

    #[test]
    fn segment_counts() {
        assert_eq!(segment(&[0.0; 1000], 50.0, "m").unwrap().len(), 5);
        let s = segment(&(0..999).map(f64::from).collect::<Vec<_>>(), 50.0, "m").unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[3].values[199], 799.0);
        assert_eq!(s[3].t_start, 12.0);
        assert!(segment(&[0.0; 199], 50.0, "m").is_err());
    }

    #[test]
    fn prepending_a_segment_shifts_indices() {
        let x: Vec<f64> = (0..1234).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.5; SEGMENT_LEN];
        y.extend_from_slice(&x);
        let a = segment(&x, 50.0, "m").unwrap();
        let b = segment(&y, 50.0, "m").unwrap();
        assert_eq!(b.len(), a.len() + 1);
        for (sa, sb) in a.iter().zip(&b[1..]) {
            assert_eq!(sa.values, sb.values);
            assert_eq!(sa.index + 1, sb.index);
        }
    }

    fn labels(segs: &[Segment]) -> Vec<u8> {
        segs.iter().map(|s| s.label.unwrap().index()).collect()
    }

    #[test]
    fn no_events_means_respiratory() {
        let mut segs = segment(&[0.0; 1000], 50.0, "m").unwrap();
        label_segments(&mut segs, 50.0, LabelSource::Truth(&GroundTruth::default()), 1.0).unwrap();
        assert_eq!(labels(&segs), vec![3; 5]);
        label_segments(&mut segs, 50.0, LabelSource::Annotations(&[]), 1.0).unwrap();
        assert_eq!(labels(&segs), vec![3; 5]);
    }

    #[test]
    fn boundary_spanning_event_marks_both_segments() {
        let mut segs = segment(&[0.0; 1000], 50.0, "m").unwrap();
        let truth = GroundTruth::new(vec![
            TruthInterval { t_start: 7.5, t_end: 8.5, class: Label::Fetal },
            TruthInterval { t_start: 13.0, t_end: 14.0, class: Label::Laugh },
        ])
        .unwrap();
        label_segments(&mut segs, 50.0, LabelSource::Truth(&truth), 1.0).unwrap();
        assert_eq!(labels(&segs), vec![3, 1, 1, 2, 3]);
    }

    #[test]
    fn fetal_wins_over_laugh_and_touching_ends_do_not_count() {
        let mut segs = segment(&[0.0; 600], 50.0, "m").unwrap();
        let truth = GroundTruth::new(vec![
            TruthInterval { t_start: 0.5, t_end: 1.0, class: Label::Laugh },
            TruthInterval { t_start: 2.0, t_end: 4.0, class: Label::Fetal },
        ])
        .unwrap();
        label_segments(&mut segs, 50.0, LabelSource::Truth(&truth), 1.0).unwrap();
        assert_eq!(labels(&segs), vec![1, 3, 3]);
    }

    #[test]
    fn annotations_use_tolerance() {
        let mut segs = segment(&[0.0; 1000], 50.0, "m").unwrap();
        let events = [
            AnnotationEvent { t: 4.5, source: AnnotationSource::Ultrasound, kind: AnnotationKind::FetalMovement },
            AnnotationEvent { t: 12.2, source: AnnotationSource::MotherButton, kind: AnnotationKind::FetalMovement },
            AnnotationEvent {
                t: 17.5,
                source: AnnotationSource::MaternalMovementButton,
                kind: AnnotationKind::MaternalLaugh,
            },
        ];
        label_segments(&mut segs, 50.0, LabelSource::Annotations(&events), 1.0).unwrap();
        // 4.5 ± 1 reaches back into segment 0; mother-button presses are not labels.
        assert_eq!(labels(&segs), vec![1, 1, 3, 3, 2]);
        label_segments(&mut segs, 50.0, LabelSource::Annotations(&events), 0.0).unwrap();
        assert_eq!(labels(&segs), vec![3, 1, 3, 3, 2]);
        assert!(label_segments(&mut segs, 50.0, LabelSource::Annotations(&events), -1.0).is_err());
    }
}
