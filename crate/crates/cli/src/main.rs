//! `fetalkick` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Fetal-movement recognition from abdominal accelerometer recordings.
#[derive(Debug, Parser)]
#[command(name = "fetalkick", version)]
pub struct Cli {
    /// Root seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// `key = value` parameter file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with ground truth.
    Synth(SynthArgs),
    /// Write one spectrogram or factor image per segment of a session.
    Preprocess(PreprocessArgs),
    /// Train a model on every labeled segment of a corpus.
    Train(TrainArgs),
    /// Split, train and evaluate one algorithm; write the model and reports.
    Run(RunArgs),
    /// Count kicks in a session with a trained model.
    Analyze(AnalyzeArgs),
    /// Render one or more report.json files as tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub mothers: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Session length in seconds; event counts scale with it.
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Session file.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// spect, nnmf-w or nnmf-h.
    #[arg(long, default_value = "spect", value_parser = parse_feature)]
    pub feature: fetalkick_core::pipeline::FeatureKind,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Skip the high-pass filter.
    #[arg(long)]
    pub no_filter: bool,
    /// gray or rgb.
    #[arg(long)]
    pub mode: Option<String>,
    /// Interval file to label segments with instead of the annotations.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainOptions {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// full or compact.
    #[arg(long)]
    pub network: Option<String>,
    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub algo: u8,
    /// Must agree with the algorithm when given.
    #[arg(long, value_parser = parse_feature)]
    pub feature: Option<fetalkick_core::pipeline::FeatureKind>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainOptions,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub algo: u8,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainOptions,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub session: PathBuf,
    /// kicks.json to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json files, one per algorithm.
    #[arg(long = "in", value_name = "FILE", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "md", value_parser = ["csv", "md"])]
    pub format: String,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_feature(s: &str) -> Result<fetalkick_core::pipeline::FeatureKind, String> {
    fetalkick_core::pipeline::FeatureKind::from_token(s).ok_or_else(|| format!("`{s}` is not spect, nnmf-w or nnmf-h"))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fetalkick_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use fetalkick_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::InvalidParameter(_)) => 1,
            CliError::Core(E::Numeric(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
