use std::collections::HashSet;

use super::EvalError;
use crate::io::{Label, PromptModality};

/// One scored video.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub label: Label,
    pub generator: String,
    pub modality: PromptModality,
    pub score: f64,
    pub predicted: Label,
}

/// Video-level predictions with unique ids and scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    rows: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(rows: Vec<Prediction>) -> Result<Self, EvalError> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !(0.0..=1.0).contains(&r.score) {
                return Err(EvalError::ScoreRange { id: r.id.clone(), score: r.score });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(EvalError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Prediction] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fake rows of one generator.
    pub fn generator_fakes(&self, generator: &str) -> Vec<&Prediction> {
        self.rows.iter().filter(|r| r.label.is_fake() && r.generator == generator).collect()
    }

    pub fn confusion(&self) -> Confusion {
        Confusion::from_pairs(self.rows.iter().map(|r| (r.label, r.predicted)))
    }

    pub fn scores_and_labels(&self) -> (Vec<f64>, Vec<bool>) {
        self.rows.iter().map(|r| (r.score, r.label.is_fake())).unzip()
    }
}

/// Confusion counts with fake as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Self::default();
        for (truth, pred) in pairs {
            match (truth.is_fake(), pred.is_fake()) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> Result<f64, EvalError> {
        match self.total() {
            0 => Err(EvalError::Empty),
            n => Ok((self.tp + self.tn) as f64 / n as f64),
        }
    }

    /// Zero when nothing is predicted fake.
    pub fn precision(&self) -> f64 {
        match self.tp + self.fp {
            0 => 0.0,
            n => self.tp as f64 / n as f64,
        }
    }

    pub fn recall(&self) -> Result<f64, EvalError> {
        match self.tp + self.fn_ {
            0 => Err(EvalError::NoPositives),
            n => Ok(self.tp as f64 / n as f64),
        }
    }

    /// `2PR / (P + R)`, zero when both are zero.
    pub fn f1(&self) -> Result<f64, EvalError> {
        let (p, r) = (self.precision(), self.recall()?);
        Ok(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
    }
}

/// Fraction of rows whose prediction matches the label. On one generator's
/// fake rows this is the fraction detected as fake.
pub fn accuracy(rows: &[&Prediction]) -> Result<f64, EvalError> {
    Confusion::from_pairs(rows.iter().map(|r| (r.label, r.predicted))).accuracy()
}

/// Step-wise area under the precision-recall curve, fake = positive.
///
/// Thresholds are the distinct scores in descending order; rows sharing a
/// score enter together.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != positives.len() {
        return Err(EvalError::LengthMismatch { scores: scores.len(), labels: positives.len() });
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(EvalError::ScoreRange { id: String::new(), score: *bad });
    }
    let total_pos = positives.iter().filter(|p| **p).count();
    if total_pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut prev_recall, mut ap) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += positives[order[i]] as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / total_pos as f64;
        ap += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
    }
    Ok(ap)
}
