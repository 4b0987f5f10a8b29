//! Session recordings and their CSV file format.
//!
//! ```text
//! #FKS1,mother_id=<str>,age=<int>,ga_weeks=<int>,gender=<m|f|u>,parity=<int>,fs=<float>
//! S,<t>,<ax>,<ay>,<az>
//! E,<t>,<mb|mm|us>,<fm|ml|mr|mo>
//! ```
//!
//! Sample rows carry six fractional digits. `E` rows may be interleaved with
//! samples; the canonical writer emits them after all samples. String header
//! values are percent-escaped for `%`, `,`, `=`, CR and LF. An optional
//! `notes=` key carries free-text metadata.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &str = "#FKS1";

const SPACING_TOL_S: f64 = 1e-6 + 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetalGender {
    Male,
    Female,
    Unstated,
}

impl FetalGender {
    pub fn token(self) -> &'static str {
        match self {
            FetalGender::Male => "m",
            FetalGender::Female => "f",
            FetalGender::Unstated => "u",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "m" => Some(FetalGender::Male),
            "f" => Some(FetalGender::Female),
            "u" => Some(FetalGender::Unstated),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionMetadata {
    pub mother_id: String,
    pub maternal_age: u32,
    /// 20..=45; 41 and above stand for "40+".
    pub gestational_age_weeks: u32,
    pub fetal_gender: FetalGender,
    pub parity: u32,
    pub notes: String,
}

impl Default for SessionMetadata {
    fn default() -> Self {
        SessionMetadata {
            mother_id: "M01".to_string(),
            maternal_age: 28,
            gestational_age_weeks: 34,
            fetal_gender: FetalGender::Unstated,
            parity: 0,
            notes: String::new(),
        }
    }
}

impl SessionMetadata {
    pub fn validate(&self) -> Result<()> {
        if self.mother_id.is_empty() {
            return Err(Error::InvalidParameter("mother_id must be non-empty".into()));
        }
        if !(20..=45).contains(&self.gestational_age_weeks) {
            return Err(Error::InvalidParameter(format!(
                "gestational age {} weeks outside 20..=45",
                self.gestational_age_weeks
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccelSample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnotationSource {
    MotherButton,
    MaternalMovementButton,
    Ultrasound,
}

impl AnnotationSource {
    pub fn token(self) -> &'static str {
        match self {
            AnnotationSource::MotherButton => "mb",
            AnnotationSource::MaternalMovementButton => "mm",
            AnnotationSource::Ultrasound => "us",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "mb" => Some(AnnotationSource::MotherButton),
            "mm" => Some(AnnotationSource::MaternalMovementButton),
            "us" => Some(AnnotationSource::Ultrasound),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnotationKind {
    FetalMovement,
    MaternalLaugh,
    MaternalRespiratory,
    MaternalOther,
}

impl AnnotationKind {
    pub fn token(self) -> &'static str {
        match self {
            AnnotationKind::FetalMovement => "fm",
            AnnotationKind::MaternalLaugh => "ml",
            AnnotationKind::MaternalRespiratory => "mr",
            AnnotationKind::MaternalOther => "mo",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "fm" => Some(AnnotationKind::FetalMovement),
            "ml" => Some(AnnotationKind::MaternalLaugh),
            "mr" => Some(AnnotationKind::MaternalRespiratory),
            "mo" => Some(AnnotationKind::MaternalOther),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationEvent {
    pub t: f64,
    pub source: AnnotationSource,
    pub kind: AnnotationKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecording {
    pub metadata: SessionMetadata,
    pub sample_rate_hz: f64,
    pub samples: Vec<AccelSample>,
    pub annotations: Vec<AnnotationEvent>,
}

impl SessionRecording {
    pub fn session_id(&self) -> &str {
        &self.metadata.mother_id
    }

    pub fn duration_s(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Check every structural invariant of an in-memory recording.
    pub fn validate(&self) -> Result<()> {
        self.metadata.validate()?;
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("sample rate {} Hz", self.sample_rate_hz)));
        }
        let Some(last) = self.samples.last() else {
            return Err(Error::InvalidParameter("recording has no samples".into()));
        };
        let dt = 1.0 / self.sample_rate_hz;
        for (i, pair) in self.samples.windows(2).enumerate() {
            let step = pair[1].t - pair[0].t;
            if step <= 0.0 {
                return Err(Error::InvalidParameter(format!("non-monotonic timestamp at sample {}", i + 1)));
            }
            if (step - dt).abs() > SPACING_TOL_S {
                return Err(Error::InvalidParameter(format!("irregular sample spacing at sample {}", i + 1)));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, ev) in self.annotations.iter().enumerate() {
            check_annotation(ev, prev, last.t).map_err(|m| Error::InvalidParameter(format!("annotation {i}: {m}")))?;
            prev = ev.t;
        }
        Ok(())
    }
}

fn check_annotation(ev: &AnnotationEvent, prev_t: f64, last_t: f64) -> std::result::Result<(), String> {
    if ev.source == AnnotationSource::MotherButton && ev.kind != AnnotationKind::FetalMovement {
        return Err("mother button events must be fetal movements".into());
    }
    if !(ev.t >= 0.0 && ev.t <= last_t) {
        return Err(format!("annotation time {} outside recording", ev.t));
    }
    if ev.t < prev_t {
        return Err("non-monotonic annotation timestamp".into());
    }
    Ok(())
}

/// Round to the six fractional digits the file format stores.
pub fn quantize(x: f64) -> f64 {
    let q = (x * 1e6).round() / 1e6;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '%' => out.push_str("%25"),
            ',' => out.push_str("%2C"),
            '=' => out.push_str("%3D"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

fn parse_header(line: &str) -> Result<(SessionMetadata, f64)> {
    let err = |m: String| Error::parse(1, format!("malformed header: {m}"));
    let mut fields = line.split(',');
    if fields.next() != Some(MAGIC) {
        return Err(err(format!("expected {MAGIC} magic")));
    }
    let mut mother_id = None;
    let mut age = None;
    let mut ga = None;
    let mut gender = None;
    let mut parity = None;
    let mut fs = None;
    let mut notes = None;
    for field in fields {
        let (key, value) = field.split_once('=').ok_or_else(|| err(format!("field '{field}' is not key=value")))?;
        let int = |v: &str| v.parse::<u32>().map_err(|_| err(format!("{key}: '{v}' is not a non-negative integer")));
        let slot_taken = match key {
            "mother_id" => mother_id.replace(unescape(value).ok_or_else(|| err("bad escape in mother_id".into()))?).is_some(),
            "age" => age.replace(int(value)?).is_some(),
            "ga_weeks" => ga.replace(int(value)?).is_some(),
            "gender" => gender
                .replace(FetalGender::from_token(value).ok_or_else(|| err(format!("unknown gender token '{value}'")))?)
                .is_some(),
            "parity" => parity.replace(int(value)?).is_some(),
            "fs" => fs
                .replace(value.parse::<f64>().map_err(|_| err(format!("fs: '{value}' is not a number")))?)
                .is_some(),
            "notes" => notes.replace(unescape(value).ok_or_else(|| err("bad escape in notes".into()))?).is_some(),
            other => {
                log::warn!("ignoring unknown header key '{other}'");
                false
            }
        };
        if slot_taken {
            return Err(err(format!("duplicate key '{key}'")));
        }
    }
    let missing = |k: &str| err(format!("missing key '{k}'"));
    let metadata = SessionMetadata {
        mother_id: mother_id.ok_or_else(|| missing("mother_id"))?,
        maternal_age: age.ok_or_else(|| missing("age"))?,
        gestational_age_weeks: ga.ok_or_else(|| missing("ga_weeks"))?,
        fetal_gender: gender.ok_or_else(|| missing("gender"))?,
        parity: parity.ok_or_else(|| missing("parity"))?,
        notes: notes.unwrap_or_default(),
    };
    let fs = fs.ok_or_else(|| missing("fs"))?;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(err(format!("fs must be positive, got {fs}")));
    }
    metadata.validate().map_err(|e| err(e.to_string()))?;
    Ok((metadata, fs))
}

fn parse_real(tok: &str, what: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(line, format!("invalid {what} '{tok}'"))),
    }
}

/// Parse a session file. Any violation rejects the whole input with the
/// offending line number.
pub fn parse_session(bytes: &[u8]) -> Result<SessionRecording> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(line, "invalid UTF-8")
    })?;
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    let (metadata, fs) = match lines.next() {
        Some((_, l)) if !l.is_empty() => parse_header(l)?,
        _ => return Err(Error::parse(1, "malformed header: missing header line")),
    };
    let dt = 1.0 / fs;
    let mut samples: Vec<AccelSample> = Vec::new();
    let mut annotations = Vec::new();
    let mut annotation_lines = Vec::new();
    let mut last_line = 1;
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        last_line = lineno;
        let fields: Vec<&str> = line.split(',').collect();
        match fields[0] {
            "S" => {
                if fields.len() != 5 {
                    return Err(Error::parse(lineno, format!("sample row has {} fields, expected 5", fields.len())));
                }
                let t = parse_real(fields[1], "timestamp", lineno)?;
                let s = AccelSample {
                    t,
                    ax: parse_real(fields[2], "ax", lineno)?,
                    ay: parse_real(fields[3], "ay", lineno)?,
                    az: parse_real(fields[4], "az", lineno)?,
                };
                if t < 0.0 {
                    return Err(Error::parse(lineno, "negative timestamp"));
                }
                if let Some(prev) = samples.last() {
                    if t <= prev.t {
                        return Err(Error::parse(lineno, "non-monotonic timestamp"));
                    }
                    if (t - prev.t - dt).abs() > SPACING_TOL_S {
                        return Err(Error::parse(lineno, format!("sample spacing {} s does not match fs={fs}", t - prev.t)));
                    }
                }
                samples.push(s);
            }
            "E" => {
                if fields.len() != 4 {
                    return Err(Error::parse(lineno, format!("event row has {} fields, expected 4", fields.len())));
                }
                let t = parse_real(fields[1], "timestamp", lineno)?;
                let source = AnnotationSource::from_token(fields[2])
                    .ok_or_else(|| Error::parse(lineno, format!("unknown source token '{}'", fields[2])))?;
                let kind = AnnotationKind::from_token(fields[3])
                    .ok_or_else(|| Error::parse(lineno, format!("unknown kind token '{}'", fields[3])))?;
                annotations.push(AnnotationEvent { t, source, kind });
                annotation_lines.push(lineno);
            }
            other => return Err(Error::parse(lineno, format!("unknown row type '{other}'"))),
        }
    }
    let Some(last) = samples.last() else {
        return Err(Error::parse(last_line, "no sample rows"));
    };
    let mut prev = f64::NEG_INFINITY;
    for (ev, &lineno) in annotations.iter().zip(&annotation_lines) {
        check_annotation(ev, prev, last.t).map_err(|m| Error::parse(lineno, m))?;
        prev = ev.t;
    }
    Ok(SessionRecording { metadata, sample_rate_hz: fs, samples, annotations })
}

/// Canonical serialization: header, all sample rows, then all event rows.
pub fn write_session(rec: &SessionRecording) -> Vec<u8> {
    let m = &rec.metadata;
    let mut out = String::with_capacity(40 * (rec.samples.len() + rec.annotations.len() + 2));
    let _ = write!(
        out,
        "{MAGIC},mother_id={},age={},ga_weeks={},gender={},parity={},fs={}",
        escape(&m.mother_id),
        m.maternal_age,
        m.gestational_age_weeks,
        m.fetal_gender.token(),
        m.parity,
        rec.sample_rate_hz
    );
    if !m.notes.is_empty() {
        let _ = write!(out, ",notes={}", escape(&m.notes));
    }
    out.push('\n');
    for s in &rec.samples {
        let _ = writeln!(out, "S,{:.6},{:.6},{:.6},{:.6}", s.t, s.ax, s.ay, s.az);
    }
    for e in &rec.annotations {
        let _ = writeln!(out, "E,{:.6},{},{}", e.t, e.source.token(), e.kind.token());
    }
    out.into_bytes()
}

/// The Z-axis (normal to the abdomen) channel and the sampling rate.
pub fn extract_z(rec: &SessionRecording) -> (Vec<f64>, f64) {
    (rec.samples.iter().map(|s| s.az).collect(), rec.sample_rate_hz)
}
