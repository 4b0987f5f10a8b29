use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fetalkick_core::cnn::model_io;
use fetalkick_core::corpus::{load_corpus, load_session_file, write_corpus, CorpusSession};
use fetalkick_core::dsp::{label_segments, write_pnm, LabelSource};
use fetalkick_core::eval::{render_csv, render_markdown, EvalReport};
use fetalkick_core::pipeline::{
    analyze_session, extract_features, recording_features_with, run_algorithm, train_on, AlgorithmId, NetworkPreset,
};
use fetalkick_core::synth::generate_corpus;
use fetalkick_core::truth::parse_truth_csv;

use crate::settings::{parse_image_mode, Settings};
use crate::{AnalyzeArgs, Cli, CliError, Command, PreprocessArgs, ReportArgs, RunArgs, SynthArgs, TrainArgs, TrainOptions};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut settings = Settings::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    match cli.command {
        Command::Synth(a) => synth(&mut settings, a),
        Command::Preprocess(a) => preprocess(&mut settings, a),
        Command::Train(a) => train(&mut settings, a),
        Command::Run(a) => run(&mut settings, a),
        Command::Analyze(a) => analyze(a),
        Command::Report(a) => report(a),
    }
}

fn apply_train_options(settings: &mut Settings, o: &TrainOptions) -> Result<(), CliError> {
    let t = &mut settings.run.train;
    if let Some(v) = o.epochs {
        t.epochs = v;
    }
    if let Some(v) = o.learning_rate {
        t.learning_rate = v;
    }
    if let Some(v) = o.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = &o.network {
        settings.run.network = NetworkPreset::from_token(v)
            .ok_or_else(|| CliError::Usage(format!("network `{v}` is not full or compact")))?;
    }
    if let Some(r) = o.rank {
        settings.run.pipeline.nnmf.rank = r;
    }
    Ok(())
}

fn algorithm(n: u8) -> Result<AlgorithmId, CliError> {
    AlgorithmId::try_from(n).map_err(|e| CliError::Usage(e.to_string()))
}

fn synth(settings: &mut Settings, a: SynthArgs) -> Result<(), CliError> {
    if let Some(d) = a.duration {
        let s = &mut settings.synth;
        let k = d / s.duration_s;
        s.n_fetal = (s.n_fetal as f64 * k).round() as usize;
        s.n_laugh = (s.n_laugh as f64 * k).round() as usize;
        s.duration_s = d;
    }
    let corpus = generate_corpus(a.mothers, &settings.synth, settings.seed)?;
    let sessions: Vec<CorpusSession> = corpus.into_iter().map(Into::into).collect();
    let written = write_corpus(&a.out, &sessions)?;
    log::info!("wrote {} files to {}", written.len(), a.out.display());
    println!("{} sessions written to {}", sessions.len(), a.out.display());
    Ok(())
}

fn preprocess(settings: &mut Settings, a: PreprocessArgs) -> Result<(), CliError> {
    let cfg = &mut settings.run.pipeline;
    if let Some(r) = a.rank {
        cfg.nnmf.rank = r;
    }
    if let Some(m) = &a.mode {
        cfg.image_mode = parse_image_mode(m)?;
    }
    let rec = load_session_file(&a.input)?;
    let (mut segs, images) = recording_features_with(&rec, !a.no_filter, a.feature, cfg, settings.seed)?;
    match &a.truth {
        Some(p) => {
            let truth = parse_truth_csv(&fs::read(p)?)?;
            label_segments(&mut segs, rec.sample_rate_hz, LabelSource::Truth(&truth), cfg.label_tol_s)?;
        }
        None => label_segments(&mut segs, rec.sample_rate_hz, LabelSource::Annotations(&rec.annotations), cfg.label_tol_s)?,
    }
    fs::create_dir_all(&a.out)?;
    let ext = if cfg.image_mode.channels() == 3 { "ppm" } else { "pgm" };
    let mut index = String::from("index,t_start,label,file\n");
    for (seg, img) in segs.iter().zip(&images) {
        let label = seg.label.map(|l| l.index()).unwrap_or(3);
        let name = format!("seg_{}_{label}.{ext}", seg.index);
        fs::write(a.out.join(&name), write_pnm(img))?;
        let _ = writeln!(index, "{},{:.6},{label},{name}", seg.index, seg.t_start);
    }
    fs::write(a.out.join("segments.csv"), index)?;
    println!("{} {} images written to {}", segs.len(), a.feature.token(), a.out.display());
    Ok(())
}

fn train(settings: &mut Settings, a: TrainArgs) -> Result<(), CliError> {
    apply_train_options(settings, &a.train)?;
    let algo = algorithm(a.algo)?;
    if let Some(f) = a.feature {
        if f != algo.feature() {
            return Err(CliError::Usage(format!(
                "algorithm {algo} uses feature {}, not {}",
                algo.feature().token(),
                f.token()
            )));
        }
    }
    let corpus = load_corpus(&a.corpus)?;
    let feats = extract_features(&corpus, &[algo], &settings.run.pipeline, settings.seed)?;
    let samples = feats.get(&algo).map(Vec::as_slice).unwrap_or_default();
    let model = train_on(algo, samples, &settings.run, settings.seed)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&a.out, model_io::to_bytes(&model))?;
    println!(
        "algorithm {algo}: trained on {} segments, final loss {:.4}; model written to {}",
        samples.len(),
        model.loss_history.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

fn run(settings: &mut Settings, a: RunArgs) -> Result<(), CliError> {
    apply_train_options(settings, &a.train)?;
    let algo = algorithm(a.algo)?;
    let corpus = load_corpus(&a.corpus)?;
    let (model, report) = run_algorithm(algo, &corpus, &settings.run, settings.seed)?;
    write_reports(&a.out, &report)?;
    fs::write(a.out.join("model.fkm"), model_io::to_bytes(&model))?;
    println!(
        "algorithm {algo}: class-1 TPR {:.4}, FPR {:.4}, macro TPR {:.4} on {} held-out segments; reports in {}",
        report.tpr[0],
        report.fpr[0],
        report.macro_tpr,
        report.n_test,
        a.out.display()
    );
    Ok(())
}

fn write_reports(dir: &Path, report: &EvalReport) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json()?)?;
    for (name, body) in report.csv_files() {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let model = model_io::from_bytes(&fs::read(&a.model)?)?;
    let rec = load_session_file(&a.session)?;
    let kicks = analyze_session(&model, &rec)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&a.out, kicks.to_json()?)?;
    println!("{}: {} movements", kicks.session_id, kicks.movement_count);
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    let reports = a
        .inputs
        .iter()
        .map(|p| -> Result<EvalReport, CliError> {
            EvalReport::from_json(&fs::read(p)?).map_err(|e| {
                CliError::Core(fetalkick_core::Error::Data(format!("{}: {e}", p.display())))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let text = if a.format == "csv" { render_csv(&reports) } else { render_markdown(&reports) };
    match &a.out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
