use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "viewspan", version, about = "Multi-view consistency forensics for generated video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a labeled synthetic corpus to disk.
    Synth(SynthArgs),
    /// Per-pair reprojection residual statistics and heatmaps for a corpus.
    Analyze(AnalyzeArgs),
    /// Train the temporal detector on a corpus' train split.
    Train(TrainArgs),
    /// Score one video directory with a trained checkpoint.
    Detect(DetectArgs),
    /// Run an evaluation protocol and write its reports.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    TrainTest,
    CrossPrompt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// The memory-augmented temporal detector.
    Spann,
    /// A single threshold on the mean reprojection residual.
    Residual,
}

/// Optional TOML file. Keys mirror the long flags with `_` for `-`; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub video: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_real: Option<usize>,
    pub n_fake: Option<usize>,
    pub protocol: Option<Protocol>,
    pub detector: Option<DetectorKind>,
    pub threshold: Option<f64>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub train_family: Option<String>,
    pub min_accuracy: Option<f64>,
    pub min_ap: Option<f64>,
    pub min_off_diagonal: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

fn pick<T: Clone>(flag: &mut Option<T>, file: &Option<T>) {
    if flag.is_none() {
        flag.clone_from(file);
    }
}

pub fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Usage(format!("--{flag} is required (flag or config file)")))
}

#[derive(Debug, Args)]
pub struct TrainingFlags {
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Full passes over the training set.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Videos per update, 0 for the whole set.
    #[arg(long)]
    pub batch: Option<usize>,
}

impl TrainingFlags {
    fn merge(&mut self, file: &FileConfig) {
        pick(&mut self.lr, &file.lr);
        pick(&mut self.epochs, &file.epochs);
        pick(&mut self.batch, &file.batch);
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output corpus directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Unperturbed sequences [default: 80].
    #[arg(long)]
    pub n_real: Option<usize>,
    /// Perturbed sequences [default: 80].
    #[arg(long)]
    pub n_fake: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Corpus directory holding manifest.csv.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output directory for the CSV, summary and heatmaps.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Where to write the trained parameters.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Seeds initialization and mini-batch order.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train on this fake family only, plus all real videos.
    #[arg(long)]
    pub train_family: Option<String>,
    /// Optional CSV of the per-epoch training loss.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Video directory with frame_*.frm and pair_*.pmap files.
    #[arg(long)]
    pub video: Option<PathBuf>,
    /// Videos with a mean score above this are labeled fake [default: 0.5].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Score CSV path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Detector to fit [default: spann].
    #[arg(long, value_enum)]
    pub detector: Option<DetectorKind>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Train-test only: train on one fake family and hold out the rest.
    #[arg(long)]
    pub train_family: Option<String>,
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Fail with exit code 4 if video accuracy falls below this.
    #[arg(long)]
    pub min_accuracy: Option<f64>,
    /// Fail with exit code 4 if average precision falls below this.
    #[arg(long)]
    pub min_ap: Option<f64>,
    /// Fail with exit code 4 if any off-diagonal cross-prompt entry is at or below this.
    #[arg(long)]
    pub min_off_diagonal: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl SynthArgs {
    pub fn merge(&mut self, f: &FileConfig) {
        pick(&mut self.out, &f.out);
        pick(&mut self.seed, &f.seed);
        pick(&mut self.n_real, &f.n_real);
        pick(&mut self.n_fake, &f.n_fake);
    }
}

impl AnalyzeArgs {
    pub fn merge(&mut self, f: &FileConfig) {
        pick(&mut self.corpus, &f.corpus);
        pick(&mut self.out, &f.out);
    }
}

impl TrainArgs {
    pub fn merge(&mut self, f: &FileConfig) {
        pick(&mut self.corpus, &f.corpus);
        pick(&mut self.checkpoint, &f.checkpoint);
        pick(&mut self.seed, &f.seed);
        pick(&mut self.train_family, &f.train_family);
        pick(&mut self.out, &f.out);
        self.training.merge(f);
    }
}

impl DetectArgs {
    pub fn merge(&mut self, f: &FileConfig) {
        pick(&mut self.checkpoint, &f.checkpoint);
        pick(&mut self.video, &f.video);
        pick(&mut self.threshold, &f.threshold);
        pick(&mut self.out, &f.out);
    }
}

impl EvalArgs {
    pub fn merge(&mut self, f: &FileConfig) {
        pick(&mut self.corpus, &f.corpus);
        pick(&mut self.protocol, &f.protocol);
        pick(&mut self.seed, &f.seed);
        pick(&mut self.out, &f.out);
        pick(&mut self.detector, &f.detector);
        pick(&mut self.threshold, &f.threshold);
        pick(&mut self.train_family, &f.train_family);
        pick(&mut self.min_accuracy, &f.min_accuracy);
        pick(&mut self.min_ap, &f.min_ap);
        pick(&mut self.min_off_diagonal, &f.min_off_diagonal);
        self.training.merge(f);
    }
}
