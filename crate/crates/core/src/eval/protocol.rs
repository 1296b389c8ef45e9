use std::path::PathBuf;

use super::metrics::{accuracy, average_precision, Confusion, Prediction, PredictionSet};
use super::report::{CrossPromptReport, GeneratorAccuracy, ProtocolReport};
use super::EvalError;
use crate::detector::{
    detect_video, pair_residual, train, DetectorConfig, DetectorParams, TrainConfig, TrainingExample, VideoInputs,
};
use crate::geometry::residual_statistics;
use crate::io::{DatasetManifest, Label, ManifestRow, PromptModality, Split, VideoData, VideoEntry};
use crate::synth::Corpus;

/// Where the videos of a manifest come from.
pub trait VideoSource {
    fn load(&self, row: &ManifestRow) -> Result<VideoData, EvalError>;
}

impl VideoSource for Corpus {
    fn load(&self, row: &ManifestRow) -> Result<VideoData, EvalError> {
        self.sequences.get(&row.id).map(|s| s.to_video()).ok_or_else(|| EvalError::MissingVideo(row.id.clone()))
    }
}

/// Videos stored as directories under `root`, one per manifest `path`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectorySource {
    pub root: PathBuf,
}

impl VideoSource for DirectorySource {
    fn load(&self, row: &ManifestRow) -> Result<VideoData, EvalError> {
        Ok(VideoEntry::from_dir(&self.root.join(&row.path))?.load()?)
    }
}

/// Scores videos after fitting.
pub trait VideoScorer {
    /// Video score in `[0, 1]`; higher means more likely fake.
    fn score(&self, video: &VideoData) -> Result<f64, EvalError>;
    fn threshold(&self) -> f64;
}

/// A trainable detector the protocols can fit on a subset of the manifest.
pub trait Detector {
    fn name(&self) -> String;
    fn fit(&self, train: &[(VideoData, Label)]) -> Result<Box<dyn VideoScorer>, EvalError>;
}

/// The memory-augmented temporal detector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpannDetector {
    pub config: DetectorConfig,
    pub train: TrainConfig,
    pub threshold: f64,
}

impl Default for SpannDetector {
    fn default() -> Self {
        Self { config: DetectorConfig::default(), train: TrainConfig::default(), threshold: 0.5 }
    }
}

/// Fitted parameters and decision threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedDetector {
    pub params: DetectorParams,
    pub threshold: f64,
    pub loss_curve: Vec<f64>,
}

impl VideoScorer for FittedDetector {
    fn score(&self, video: &VideoData) -> Result<f64, EvalError> {
        Ok(detect_video(video, &self.params, self.threshold)?.video_score)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl SpannDetector {
    pub fn fit_params(&self, train_set: &[(VideoData, Label)]) -> Result<FittedDetector, EvalError> {
        let probe = DetectorParams::zeros(self.config);
        let examples = train_set
            .iter()
            .map(|(v, label)| Ok(TrainingExample { inputs: VideoInputs::from_video(v, &probe)?, label: *label }))
            .collect::<Result<Vec<_>, EvalError>>()?;
        let out = train(&examples, self.config, &self.train)?;
        Ok(FittedDetector { params: out.params, threshold: self.threshold, loss_curve: out.loss_curve })
    }
}

impl Detector for SpannDetector {
    fn name(&self) -> String {
        "spann".into()
    }

    fn fit(&self, train_set: &[(VideoData, Label)]) -> Result<Box<dyn VideoScorer>, EvalError> {
        Ok(Box::new(self.fit_params(train_set)?))
    }
}

/// Mean confidence-weighted reprojection residual over all pairs of a video.
pub fn video_residual(video: &VideoData) -> Result<f64, EvalError> {
    let mut total = 0.0;
    for (i, pair) in video.pairs.iter().enumerate() {
        let r = pair_residual(&video.frames[i + 1], &video.frames[i], pair)?;
        total += match residual_statistics(&r, &pair.c11) {
            Ok(s) => s.weighted_mean,
            Err(_) => 0.0,
        };
    }
    Ok(total / video.pairs.len() as f64)
}

/// Thresholds the mean residual. Fitting picks the cut between sorted
/// training residuals with the best training accuracy; the score
/// `r / (r + cut)` crosses 0.5 exactly at the cut.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualBaseline;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualCut(pub f64);

impl VideoScorer for ResidualCut {
    fn score(&self, video: &VideoData) -> Result<f64, EvalError> {
        let r = video_residual(video)?;
        Ok(if r + self.0 > 0.0 { r / (r + self.0) } else { 0.5 })
    }

    fn threshold(&self) -> f64 {
        0.5
    }
}

impl Detector for ResidualBaseline {
    fn name(&self) -> String {
        "residual-threshold".into()
    }

    fn fit(&self, train_set: &[(VideoData, Label)]) -> Result<Box<dyn VideoScorer>, EvalError> {
        let mut rs = train_set
            .iter()
            .map(|(v, l)| Ok((video_residual(v)?, l.is_fake())))
            .collect::<Result<Vec<_>, EvalError>>()?;
        if rs.is_empty() {
            return Err(EvalError::Empty);
        }
        rs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // cut k puts rows k.. on the fake side
        let mut best = (0usize, usize::MAX);
        let fakes_total = rs.iter().filter(|r| r.1).count();
        let mut fakes_below = 0;
        for k in 0..=rs.len() {
            if k > 0 && rs[k - 1].1 {
                fakes_below += 1;
            }
            let false_alarms = rs.len() - k - (fakes_total - fakes_below);
            if fakes_below + false_alarms < best.1 {
                best = (k, fakes_below + false_alarms);
            }
        }
        let k = best.0;
        let cut = match (k.checked_sub(1).map(|i| rs[i].0), rs.get(k).map(|r| r.0)) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) => a * 2.0 + 1e-9,
            (None, Some(b)) => b * 0.5,
            (None, None) => 0.0,
        };
        Ok(Box::new(ResidualCut(cut.max(1e-12))))
    }
}

/// Which fake generators the train-test protocol trains on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrainScope {
    /// Every fake family; each is then evaluated on its own test split.
    AllGenerators,
    /// One family; the others are held out.
    Generator(String),
}

fn load_rows(
    rows: &[&ManifestRow],
    source: &dyn VideoSource,
) -> Result<Vec<(VideoData, Label)>, EvalError> {
    rows.iter().map(|r| Ok((source.load(r)?, r.label))).collect()
}

fn predict(
    rows: &[&ManifestRow],
    source: &dyn VideoSource,
    scorer: &dyn VideoScorer,
) -> Result<PredictionSet, EvalError> {
    let preds = rows
        .iter()
        .map(|r| {
            let score = scorer.score(&source.load(r)?)?;
            let predicted = if score > scorer.threshold() { Label::Fake } else { Label::Real };
            Ok(Prediction {
                id: r.id.clone(),
                label: r.label,
                generator: r.generator.clone(),
                modality: r.prompt_modality,
                score,
                predicted,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    PredictionSet::new(preds)
}

/// Trains on the real train split plus the fake train split of the chosen
/// generators, then evaluates every fake generator's test split and the real
/// test split.
///
/// Per-generator accuracy is the detection rate on that generator's fake test
/// rows. Recall, F1, AP and video accuracy use the real test rows plus the
/// held-out fake test rows.
pub fn run_train_test_protocol(
    manifest: &DatasetManifest,
    source: &dyn VideoSource,
    detector: &dyn Detector,
    scope: &TrainScope,
    seed: u64,
) -> Result<ProtocolReport, EvalError> {
    manifest.validate()?;
    let generators = manifest.fake_generators();
    if generators.len() < 2 {
        return Err(EvalError::TooFewGenerators(generators.len()));
    }
    let trained_on: Vec<String> = match scope {
        TrainScope::AllGenerators => generators.clone(),
        TrainScope::Generator(g) if generators.contains(g) => vec![g.clone()],
        TrainScope::Generator(g) => return Err(EvalError::UnknownGenerator(g.clone())),
    };
    let in_scope = |r: &ManifestRow| !r.label.is_fake() || trained_on.contains(&r.generator);
    let train_rows: Vec<&ManifestRow> =
        manifest.rows.iter().filter(|r| r.split == Split::Train && in_scope(r)).collect();
    if !train_rows.iter().any(|r| !r.label.is_fake()) {
        return Err(EvalError::MissingReal("train"));
    }
    let held_out = |g: &str| matches!(scope, TrainScope::AllGenerators) || !trained_on.iter().any(|t| t == g);
    let test_rows: Vec<&ManifestRow> = manifest.rows.iter().filter(|r| r.split == Split::Test).collect();
    if !test_rows.iter().any(|r| !r.label.is_fake()) {
        return Err(EvalError::MissingReal("test"));
    }

    let scorer = detector.fit(&load_rows(&train_rows, source)?)?;
    let predictions = predict(&test_rows, source, scorer.as_ref())?;

    let mut per_generator = Vec::with_capacity(generators.len());
    for g in &generators {
        let fakes = predictions.generator_fakes(g);
        if fakes.is_empty() {
            return Err(EvalError::EmptyTestSet(g.clone()));
        }
        per_generator.push(GeneratorAccuracy {
            generator: g.clone(),
            modality: fakes[0].modality,
            n_test: fakes.len(),
            accuracy: accuracy(&fakes)?,
            held_out: held_out(g),
        });
    }
    let evaluated: Vec<&GeneratorAccuracy> = per_generator.iter().filter(|g| g.held_out).collect();
    let n_eval: usize = evaluated.iter().map(|g| g.n_test).sum();
    let weighted_average = evaluated.iter().map(|g| g.accuracy * g.n_test as f64).sum::<f64>() / n_eval as f64;
    let uniform_average = evaluated.iter().map(|g| g.accuracy).sum::<f64>() / evaluated.len() as f64;

    let eval_rows: Vec<&Prediction> =
        predictions.rows().iter().filter(|p| !p.label.is_fake() || held_out(&p.generator)).collect();
    let confusion = Confusion::from_pairs(eval_rows.iter().map(|p| (p.label, p.predicted)));
    let scores: Vec<f64> = eval_rows.iter().map(|p| p.score).collect();
    let positives: Vec<bool> = eval_rows.iter().map(|p| p.label.is_fake()).collect();

    Ok(ProtocolReport {
        detector: detector.name(),
        seed,
        train_strata: trained_on,
        test_strata: evaluated.iter().map(|g| g.generator.clone()).collect(),
        per_generator,
        weighted_average,
        uniform_average,
        video_accuracy: confusion.accuracy()?,
        precision: confusion.precision(),
        recall: confusion.recall()?,
        f1: confusion.f1()?,
        average_precision: average_precision(&scores, &positives)?,
        confusion,
        predictions,
    })
}

/// For each prompt modality, trains on its fake train rows plus all real
/// train rows and reports the detection rate on every modality's fake test
/// rows. The last column averages the three, weighted by test-set size.
pub fn run_cross_prompt_protocol(
    manifest: &DatasetManifest,
    source: &dyn VideoSource,
    detector: &dyn Detector,
    seed: u64,
) -> Result<CrossPromptReport, EvalError> {
    manifest.validate()?;
    let modalities = PromptModality::GENERATIVE;
    for m in modalities {
        for split in [Split::Train, Split::Test] {
            if !manifest.rows.iter().any(|r| r.label.is_fake() && r.prompt_modality == m && r.split == split) {
                return Err(EvalError::MissingModality { modality: m, split });
            }
        }
    }
    let real_train: Vec<&ManifestRow> =
        manifest.rows.iter().filter(|r| !r.label.is_fake() && r.split == Split::Train).collect();
    if real_train.is_empty() {
        return Err(EvalError::MissingReal("train"));
    }
    let fake_test: Vec<&ManifestRow> =
        manifest.rows.iter().filter(|r| r.label.is_fake() && r.split == Split::Test).collect();
    let test_sizes = modalities.map(|m| fake_test.iter().filter(|r| r.prompt_modality == m).count());

    let mut matrix = [[0.0; 4]; 3];
    let mut uniform = [0.0; 3];
    for (i, m) in modalities.iter().enumerate() {
        let mut rows = real_train.clone();
        rows.extend(manifest.rows.iter().filter(|r| r.label.is_fake() && r.split == Split::Train && r.prompt_modality == *m));
        let scorer = detector.fit(&load_rows(&rows, source)?)?;
        let preds = predict(&fake_test, source, scorer.as_ref())?;
        for (j, tm) in modalities.iter().enumerate() {
            let subset: Vec<&Prediction> = preds.rows().iter().filter(|p| p.modality == *tm).collect();
            matrix[i][j] = accuracy(&subset)?;
        }
        let n: usize = test_sizes.iter().sum();
        matrix[i][3] = (0..3).map(|j| matrix[i][j] * test_sizes[j] as f64).sum::<f64>() / n as f64;
        uniform[i] = (0..3).map(|j| matrix[i][j]).sum::<f64>() / 3.0;
    }
    Ok(CrossPromptReport { detector: detector.name(), seed, modalities, test_sizes, matrix, uniform_average: uniform })
}
