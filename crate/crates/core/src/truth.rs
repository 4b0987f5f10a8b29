//! Ground-truth event intervals and the `truth.csv` sidecar.
//!
//! Time not covered by any interval is respiratory background (class 3).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsp::segment::Label;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthInterval {
    pub t_start: f64,
    pub t_end: f64,
    /// Only `Fetal` or `Laugh`.
    pub class: Label,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub intervals: Vec<TruthInterval>,
}

impl GroundTruth {
    /// Sorted by start, disjoint, class 1 or 2 only.
    pub fn new(mut intervals: Vec<TruthInterval>) -> Result<Self> {
        intervals.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        for iv in &intervals {
            if iv.class == Label::Respiratory {
                return Err(Error::InvalidParameter("truth intervals must be class 1 or 2".into()));
            }
            if !(iv.t_end > iv.t_start) {
                return Err(Error::InvalidParameter(format!("empty interval at {}", iv.t_start)));
            }
        }
        if let Some(w) = intervals.windows(2).find(|w| w[1].t_start < w[0].t_end) {
            return Err(Error::InvalidParameter(format!("overlapping truth intervals at {}", w[1].t_start)));
        }
        Ok(GroundTruth { intervals })
    }

    pub fn of_class(&self, class: Label) -> impl Iterator<Item = &TruthInterval> {
        self.intervals.iter().filter(move |iv| iv.class == class)
    }
}

pub fn write_truth_csv(truth: &GroundTruth) -> Vec<u8> {
    let mut out = String::from("t_start,t_end,class\n");
    for iv in &truth.intervals {
        let _ = writeln!(out, "{:.6},{:.6},{}", iv.t_start, iv.t_end, iv.class.index());
    }
    out.into_bytes()
}

pub fn parse_truth_csv(bytes: &[u8]) -> Result<GroundTruth> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::parse(1, "invalid UTF-8"))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "t_start,t_end,class")) => {}
        _ => return Err(Error::parse(1, "expected header 't_start,t_end,class'")),
    }
    let mut intervals = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::parse(lineno, format!("truth row has {} fields, expected 3", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(lineno, format!("invalid time '{s}'")));
        let class = f[2]
            .parse::<u8>()
            .ok()
            .and_then(|c| Label::try_from(c).ok())
            .filter(|c| *c != Label::Respiratory)
            .ok_or_else(|| Error::parse(lineno, format!("class must be 1 or 2, got '{}'", f[2])))?;
        intervals.push(TruthInterval { t_start: num(f[0])?, t_end: num(f[1])?, class });
    }
    GroundTruth::new(intervals).map_err(|e| Error::parse(0, e.to_string()))
}
