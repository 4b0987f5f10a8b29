//! A corpus directory holds one `<mother_id>.csv` session file per
//! recording, optionally next to a `<mother_id>.truth.csv` interval file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::session::{parse_session, write_session, SessionRecording};
use crate::truth::{parse_truth_csv, write_truth_csv, GroundTruth};

pub const TRUTH_SUFFIX: &str = ".truth.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSession {
    pub recording: SessionRecording,
    /// Exact event intervals when known; otherwise labels come from the
    /// recording's annotations.
    pub truth: Option<GroundTruth>,
}

impl From<(SessionRecording, GroundTruth)> for CorpusSession {
    fn from((recording, truth): (SessionRecording, GroundTruth)) -> Self {
        CorpusSession { recording, truth: Some(truth) }
    }
}

fn file_stem(id: &str) -> Result<&str> {
    if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
        return Err(Error::InvalidParameter(format!("mother id {id:?} is not usable as a file name")));
    }
    Ok(id)
}

/// Write every session (and truth file when present). Returns the paths written.
pub fn write_corpus(dir: &Path, sessions: &[CorpusSession]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in sessions {
        let stem = file_stem(s.recording.session_id())?;
        let path = dir.join(format!("{stem}.csv"));
        fs::write(&path, write_session(&s.recording))?;
        written.push(path);
        if let Some(truth) = &s.truth {
            let path = dir.join(format!("{stem}{TRUTH_SUFFIX}"));
            fs::write(&path, write_truth_csv(truth))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn load_session_file(path: &Path) -> Result<SessionRecording> {
    let bytes = fs::read(path)?;
    parse_session(&bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// Load all sessions in `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusSession>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".csv") && !name.ends_with(TRUTH_SUFFIX)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Data(format!("no session files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let recording = load_session_file(p)?;
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let truth_path = p.with_file_name(format!("{stem}{TRUTH_SUFFIX}"));
            let truth = if truth_path.exists() {
                let bytes = fs::read(&truth_path)?;
                Some(parse_truth_csv(&bytes).map_err(|e| Error::Data(format!("{}: {e}", truth_path.display())))?)
            } else {
                None
            };
            Ok(CorpusSession { recording, truth })
        })
        .collect()
}
