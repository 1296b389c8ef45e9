use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use viewspan::detector::{
    detect_entry, pair_residual, read_checkpoint, write_checkpoint, DetectorConfig, TrainConfig,
    DEFAULT_THRESHOLD,
};
use viewspan::eval::{
    run_cross_prompt_protocol, run_train_test_protocol, Detector, DirectorySource, ResidualBaseline,
    SpannDetector, TrainScope, VideoSource, CROSS_PROMPT_ID, TRAIN_TEST_ID,
};
use viewspan::geometry::{residual_statistics, ImageFrame, ResidualMap, ResidualStats};
use viewspan::io::{
    encode_frame, encode_pgm, load_manifest, write_video, DatasetManifest, ManifestRow, Split, VideoEntry,
};
use viewspan::synth::{make_corpus, CorpusConfig};

use crate::args::*;
use crate::output::{write_atomic, StagedDir};
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.csv";
const SUMMARY_FILE: &str = "summary.txt";
const DEFAULT_COUNT: usize = 80;
/// Heatmap PGMs multiply the residual by this before 8-bit quantization.
const PGM_GAIN: f64 = 10.0;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    CliError::Usage(msg.into()).into()
}

fn existing_dir(path: &Path, flag: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(anyhow::anyhow!("--{flag} {} is not a directory", path.display()))
    }
}

fn existing_file(path: &Path, flag: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(anyhow::anyhow!("--{flag} {} does not exist", path.display()))
    }
}

fn load_corpus_manifest(corpus: &Path) -> Result<DatasetManifest> {
    let path = corpus.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let manifest = load_manifest(&text).with_context(|| format!("parsing {}", path.display()))?;
    manifest.validate().with_context(|| format!("validating {}", path.display()))?;
    Ok(manifest)
}

fn csv_bytes(rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner()?)
}

fn validate_training(t: &TrainingFlags, seed: u64) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let lr = t.lr.unwrap_or(d.lr);
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(usage(format!("--lr must be finite and nonnegative, got {lr}")));
    }
    Ok(TrainConfig { lr, epochs: t.epochs.unwrap_or(d.epochs), batch: t.batch.unwrap_or(d.batch), seed })
}

fn validate_threshold(threshold: Option<f64>) -> Result<f64> {
    match threshold {
        Some(t) if !(0.0..=1.0).contains(&t) => Err(usage(format!("--threshold must lie in [0, 1], got {t}"))),
        t => Ok(t.unwrap_or(DEFAULT_THRESHOLD)),
    }
}

pub fn synth(mut a: SynthArgs) -> Result<()> {
    a.merge(&FileConfig::load(a.config.as_deref())?);
    let out = required(&a.out, "out")?.clone();
    let seed = *required(&a.seed, "seed")?;
    let (n_real, n_fake) = (a.n_real.unwrap_or(DEFAULT_COUNT), a.n_fake.unwrap_or(DEFAULT_COUNT));
    if n_real == 0 || n_fake == 0 {
        return Err(usage(format!("--n-real and --n-fake must be positive, got {n_real} and {n_fake}")));
    }

    let corpus = make_corpus(n_real, n_fake, &CorpusConfig::standard(), seed)?;
    let staged = StagedDir::new(&out, MANIFEST_FILE)?;
    corpus
        .manifest
        .rows
        .par_iter()
        .map(|row| write_video(&staged.path().join(&row.path), &corpus.sequences[&row.id].to_video()))
        .collect::<Result<Vec<_>, _>>()?;
    write_atomic(&staged.path().join(MANIFEST_FILE), corpus.manifest.to_csv().as_bytes())?;
    staged.commit()?;

    for w in &corpus.split_warnings {
        eprintln!("warning: {w}");
    }
    let test = corpus.manifest.rows.iter().filter(|r| r.split == Split::Test).count();
    println!(
        "wrote {} sequences ({n_real} real, {n_fake} fake; {} train, {test} test) to {}",
        corpus.manifest.len(),
        corpus.manifest.len() - test,
        out.display()
    );
    Ok(())
}

struct PairAnalysis {
    t: usize,
    residual: ResidualMap,
    stats: Option<ResidualStats>,
}

fn analyze_video(corpus: &Path, row: &ManifestRow) -> Result<Vec<PairAnalysis>> {
    let dir = corpus.join(&row.path);
    let video = VideoEntry::from_dir(&dir)
        .and_then(|e| e.load())
        .with_context(|| format!("loading video `{}` from {}", row.id, dir.display()))?;
    video
        .pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| {
            let residual = pair_residual(&video.frames[i + 1], &video.frames[i], pair)?;
            // a pair with no overlap has no statistics but still gets a heatmap
            let stats = residual_statistics(&residual, &pair.c11).ok();
            Ok(PairAnalysis { t: i + 1, residual, stats })
        })
        .collect()
}

fn heatmap_frame(r: &ResidualMap) -> Result<ImageFrame> {
    let data = r.values.iter().flat_map(|v| [*v; 3]).collect();
    Ok(ImageFrame::new(r.height, r.width, data)?)
}

fn describe(values: &mut [f64]) -> String {
    if values.is_empty() {
        return "n 0".into();
    }
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let q = |p: f64| values[((values.len() - 1) as f64 * p).round() as usize];
    format!("n {}  mean {mean:.6}  median {:.6}  p10 {:.6}  p90 {:.6}", values.len(), q(0.5), q(0.1), q(0.9))
}

pub fn analyze(mut a: AnalyzeArgs) -> Result<()> {
    a.merge(&FileConfig::load(a.config.as_deref())?);
    let corpus = required(&a.corpus, "corpus")?.clone();
    let out = required(&a.out, "out")?.clone();
    existing_dir(&corpus, "corpus")?;
    let manifest = load_corpus_manifest(&corpus)?;

    let results: Vec<Vec<PairAnalysis>> =
        manifest.rows.par_iter().map(|row| analyze_video(&corpus, row)).collect::<Result<_>>()?;

    let staged = StagedDir::new(&out, SUMMARY_FILE)?;
    let heatmaps = staged.path().join("heatmaps");
    fs::create_dir_all(&heatmaps)?;
    let header = ["id", "label", "generator", "prompt_modality", "split", "pair", "mean", "weighted_mean", "valid_fraction", "high_freq_energy"];
    let mut rows = vec![header.map(String::from).to_vec()];
    let (mut real, mut fake) = (Vec::new(), Vec::new());
    let mut per_generator: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for (row, pairs) in manifest.rows.iter().zip(&results) {
        for p in pairs {
            let stem = format!("{}_pair_{:03}", row.id, p.t);
            fs::write(heatmaps.join(format!("{stem}.frm")), encode_frame(&heatmap_frame(&p.residual)?))?;
            let scaled: Vec<f64> = p.residual.values.iter().map(|v| v * PGM_GAIN).collect();
            fs::write(heatmaps.join(format!("{stem}.pgm")), encode_pgm(p.residual.height, p.residual.width, &scaled))?;

            let fmt = |f: fn(&ResidualStats) -> f64| p.stats.as_ref().map(|s| format!("{:.9}", f(s))).unwrap_or_default();
            rows.push(vec![
                row.id.clone(),
                row.label.to_string(),
                row.generator.clone(),
                row.prompt_modality.to_string(),
                row.split.to_string(),
                p.t.to_string(),
                fmt(|s| s.mean),
                fmt(|s| s.weighted_mean),
                p.stats.map(|s| format!("{:.9}", s.valid_fraction)).unwrap_or_else(|| "0".into()),
                fmt(|s| s.high_freq_energy),
            ]);
            if let Some(s) = p.stats {
                if row.label.is_fake() { &mut fake } else { &mut real }.push(s.weighted_mean);
                per_generator.entry(row.generator.as_str()).or_default().push(s.weighted_mean);
            }
        }
    }
    write_atomic(&staged.path().join("residuals.csv"), &csv_bytes(rows)?)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "confidence-weighted mean residual per pair");
    let (real_mean, fake_mean) = (mean(&real), mean(&fake));
    let _ = writeln!(summary, "real  {}", describe(&mut real));
    let _ = writeln!(summary, "fake  {}", describe(&mut fake));
    if real_mean > 0.0 {
        let _ = writeln!(summary, "fake / real mean ratio {:.3}", fake_mean / real_mean);
    }
    let _ = writeln!(summary);
    for (g, v) in per_generator.iter_mut() {
        let _ = writeln!(summary, "{g:<20} {}", describe(v));
    }
    write_atomic(&staged.path().join(SUMMARY_FILE), summary.as_bytes())?;
    staged.commit()?;
    print!("{summary}");
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn train(mut a: TrainArgs) -> Result<()> {
    a.merge(&FileConfig::load(a.config.as_deref())?);
    let corpus = required(&a.corpus, "corpus")?.clone();
    let checkpoint = required(&a.checkpoint, "checkpoint")?.clone();
    let seed = *required(&a.seed, "seed")?;
    let train = validate_training(&a.training, seed)?;
    existing_dir(&corpus, "corpus")?;
    let manifest = load_corpus_manifest(&corpus)?;
    if let Some(f) = &a.train_family {
        if !manifest.fake_generators().contains(f) {
            return Err(usage(format!("--train-family `{f}` is not a fake generator of this corpus")));
        }
    }

    let rows: Vec<&ManifestRow> = manifest
        .rows
        .iter()
        .filter(|r| r.split == Split::Train)
        .filter(|r| !r.label.is_fake() || a.train_family.as_ref().is_none_or(|f| *f == r.generator))
        .collect();
    let source = DirectorySource { root: corpus };
    let videos = rows.par_iter().map(|r| Ok((source.load(r)?, r.label))).collect::<Result<Vec<_>>>()?;

    let detector = SpannDetector { config: DetectorConfig::default(), train, threshold: DEFAULT_THRESHOLD };
    let fitted = detector.fit_params(&videos)?;
    write_atomic(&checkpoint, &write_checkpoint(&fitted.params)?)?;
    if let Some(out) = &a.out {
        let mut rows = vec![vec!["epoch".to_string(), "loss".to_string()]];
        rows.extend(fitted.loss_curve.iter().enumerate().map(|(e, l)| vec![e.to_string(), format!("{l:.9}")]));
        write_atomic(out, &csv_bytes(rows)?)?;
    }
    let first = fitted.loss_curve.first().copied().unwrap_or(f64::NAN);
    let last = fitted.loss_curve.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained on {} videos for {} epochs; loss {first:.6} -> {last:.6}; wrote {}",
        videos.len(),
        train.epochs,
        checkpoint.display()
    );
    Ok(())
}

pub fn detect(mut a: DetectArgs) -> Result<()> {
    a.merge(&FileConfig::load(a.config.as_deref())?);
    let checkpoint = required(&a.checkpoint, "checkpoint")?.clone();
    let video = required(&a.video, "video")?.clone();
    let threshold = validate_threshold(a.threshold)?;
    existing_file(&checkpoint, "checkpoint")?;
    existing_dir(&video, "video")?;

    let bytes = fs::read(&checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
    let params = read_checkpoint(&bytes).with_context(|| format!("parsing {}", checkpoint.display()))?;
    let entry = VideoEntry::from_dir(&video).with_context(|| format!("scanning {}", video.display()))?;
    let trace = detect_entry(&entry, &params, threshold)?;

    let mut rows = vec![["t", "score", "label"].map(String::from).to_vec()];
    for (i, s) in trace.frame_scores.iter().enumerate() {
        rows.push(vec![(i + 1).to_string(), format!("{s:.9}"), String::new()]);
    }
    rows.push(vec!["video".into(), format!("{:.9}", trace.video_score), trace.label.to_string()]);
    let csv = csv_bytes(rows)?;
    match &a.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            println!("{} ({:.6}) -> {}", trace.label, trace.video_score, path.display());
        }
        None => print!("{}", String::from_utf8(csv)?),
    }
    Ok(())
}

fn report_path(out: &Path, protocol: &str, detector: &str, seed: u64, suffix: &str) -> PathBuf {
    out.join(format!("{protocol}_{detector}_seed{seed}{suffix}"))
}

pub fn eval(mut a: EvalArgs) -> Result<()> {
    a.merge(&FileConfig::load(a.config.as_deref())?);
    let corpus = required(&a.corpus, "corpus")?.clone();
    let protocol = *required(&a.protocol, "protocol")?;
    let seed = *required(&a.seed, "seed")?;
    let out = required(&a.out, "out")?.clone();
    let threshold = validate_threshold(a.threshold)?;
    let train = validate_training(&a.training, seed)?;
    match protocol {
        Protocol::CrossPrompt if a.train_family.is_some() => {
            return Err(usage("--train-family applies to the train-test protocol only"))
        }
        Protocol::CrossPrompt if a.min_accuracy.is_some() || a.min_ap.is_some() => {
            return Err(usage("--min-accuracy and --min-ap apply to the train-test protocol only"))
        }
        Protocol::TrainTest if a.min_off_diagonal.is_some() => {
            return Err(usage("--min-off-diagonal applies to the cross-prompt protocol only"))
        }
        _ => {}
    }
    existing_dir(&corpus, "corpus")?;
    let manifest = load_corpus_manifest(&corpus)?;
    let source = DirectorySource { root: corpus };
    let detector: Box<dyn Detector> = match a.detector.unwrap_or(DetectorKind::Spann) {
        DetectorKind::Spann => Box::new(SpannDetector { config: DetectorConfig::default(), train, threshold }),
        DetectorKind::Residual => Box::new(ResidualBaseline),
    };
    let name = detector.name();

    let mut violations = Vec::new();
    match protocol {
        Protocol::TrainTest => {
            let scope = a.train_family.clone().map_or(TrainScope::AllGenerators, TrainScope::Generator);
            let report = run_train_test_protocol(&manifest, &source, detector.as_ref(), &scope, seed)?;
            write_atomic(&report_path(&out, TRAIN_TEST_ID, &name, seed, ".txt"), report.to_text().as_bytes())?;
            write_atomic(&report_path(&out, TRAIN_TEST_ID, &name, seed, ".csv"), report.to_csv().as_bytes())?;
            write_atomic(
                &report_path(&out, TRAIN_TEST_ID, &name, seed, "_predictions.csv"),
                report.predictions_csv().as_bytes(),
            )?;
            print!("{}", report.to_text());
            if let Some(min) = a.min_accuracy {
                if report.video_accuracy < min {
                    violations.push(format!("video accuracy {:.4} < {min}", report.video_accuracy));
                }
            }
            if let Some(min) = a.min_ap {
                if report.average_precision < min {
                    violations.push(format!("AP {:.4} < {min}", report.average_precision));
                }
            }
        }
        Protocol::CrossPrompt => {
            let report = run_cross_prompt_protocol(&manifest, &source, detector.as_ref(), seed)?;
            write_atomic(&report_path(&out, CROSS_PROMPT_ID, &name, seed, ".txt"), report.to_text().as_bytes())?;
            write_atomic(&report_path(&out, CROSS_PROMPT_ID, &name, seed, ".csv"), report.to_csv().as_bytes())?;
            print!("{}", report.to_text());
            if let Some(min) = a.min_off_diagonal {
                for v in report.off_diagonal().into_iter().filter(|v| *v <= min) {
                    violations.push(format!("off-diagonal accuracy {v:.4} <= {min}"));
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(violations).into())
    }
}
