use fetalkick_core::corpus::{load_corpus, write_corpus, CorpusSession};
use fetalkick_core::session::{parse_session, write_session};
use fetalkick_core::synth::{generate_corpus, SynthConfig};

fn fixtures() -> Vec<CorpusSession> {
    let cfg = SynthConfig { duration_s: 240.0, n_fetal: 18, n_laugh: 4, ..SynthConfig::default() };
    generate_corpus(4, &cfg, 17).unwrap().into_iter().map(Into::into).collect()
}

#[test]
fn synthetic_corpus_round_trips_byte_for_byte() {
    for s in fixtures() {
        let bytes = write_session(&s.recording);
        let parsed = parse_session(&bytes).unwrap();
        assert_eq!(parsed, s.recording);
        assert_eq!(write_session(&parsed), bytes);
    }
}

#[test]
fn corpus_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = fixtures();
    let written = write_corpus(dir.path(), &sessions).unwrap();
    assert_eq!(written.len(), 8);
    assert!(dir.path().join("M01.csv").exists() && dir.path().join("M01.truth.csv").exists());
    let loaded = load_corpus(dir.path()).unwrap();
    assert_eq!(loaded, sessions);
}

#[test]
fn corpus_without_truth_files_loads_annotations_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut sessions = fixtures();
    sessions.iter_mut().for_each(|s| s.truth = None);
    write_corpus(dir.path(), &sessions).unwrap();
    let loaded = load_corpus(dir.path()).unwrap();
    assert!(loaded.iter().all(|s| s.truth.is_none() && !s.recording.annotations.is_empty()));
}

#[test]
fn bad_session_file_names_its_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("X.csv"), "#FKS1,mother_id=X\n").unwrap();
    let err = load_corpus(dir.path()).unwrap_err().to_string();
    assert!(err.contains("X.csv"), "{err}");
    let empty = tempfile::tempdir().unwrap();
    assert!(load_corpus(empty.path()).is_err());
}
