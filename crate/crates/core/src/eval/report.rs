use std::fmt::Write as _;

use super::metrics::{Confusion, PredictionSet};
use crate::io::PromptModality;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorAccuracy {
    pub generator: String,
    pub modality: PromptModality,
    pub n_test: usize,
    /// Fraction of this generator's fake test videos predicted fake.
    pub accuracy: f64,
    /// False when the detector was trained on this generator.
    pub held_out: bool,
}

/// Result of the train-test protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub detector: String,
    pub seed: u64,
    pub train_strata: Vec<String>,
    pub test_strata: Vec<String>,
    pub per_generator: Vec<GeneratorAccuracy>,
    /// Mean of held-out generator accuracies weighted by their test sizes.
    pub weighted_average: f64,
    pub uniform_average: f64,
    /// Accuracy over real test rows and held-out fake test rows.
    pub video_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub average_precision: f64,
    pub confusion: Confusion,
    pub predictions: PredictionSet,
}

pub const TRAIN_TEST_ID: &str = "train-test";
pub const CROSS_PROMPT_ID: &str = "cross-prompt";

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}

impl ProtocolReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "protocol: {TRAIN_TEST_ID}  detector: {}  seed: {}", self.detector, self.seed);
        let _ = writeln!(s, "trained on: {}", self.train_strata.join(", "));
        let _ = writeln!(s, "evaluated on: {}", self.test_strata.join(", "));
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<20} {:<6} {:>6} {:>9}  split", "generator", "prompt", "n", "acc (%)");
        for g in &self.per_generator {
            let tag = if g.held_out { "held-out" } else { "trained" };
            let _ = writeln!(s, "{:<20} {:<6} {:>6} {:>9}  {tag}", g.generator, g.modality.as_str(), g.n_test, pct(g.accuracy));
        }
        let _ = writeln!(s, "{:<20} {:<6} {:>6} {:>9}", "average (weighted)", "", "", pct(self.weighted_average));
        let _ = writeln!(s, "{:<20} {:<6} {:>6} {:>9}", "average (uniform)", "", "", pct(self.uniform_average));
        let _ = writeln!(s);
        let c = &self.confusion;
        let _ = writeln!(s, "video accuracy {}  precision {}  recall {}  F1 {}  AP {}", pct(self.video_accuracy), pct(self.precision), pct(self.recall), pct(self.f1), pct(self.average_precision));
        let _ = writeln!(s, "confusion (fake = positive): TP {} FP {} TN {} FN {}", c.tp, c.fp, c.tn, c.fn_);
        s
    }

    /// One `metric,key,value` row per number.
    pub fn to_csv(&self) -> String {
        let mut rows = vec![vec!["metric".to_string(), "key".to_string(), "value".to_string()]];
        let mut push = |m: &str, k: &str, v: String| rows.push(vec![m.to_string(), k.to_string(), v]);
        push("protocol", "", TRAIN_TEST_ID.into());
        push("detector", "", self.detector.clone());
        push("seed", "", self.seed.to_string());
        for t in &self.train_strata {
            push("train_stratum", t, String::new());
        }
        for g in &self.per_generator {
            push("accuracy", &g.generator, format!("{:.6}", g.accuracy));
            push("n_test", &g.generator, g.n_test.to_string());
            push("held_out", &g.generator, g.held_out.to_string());
        }
        push("average_weighted", "", format!("{:.6}", self.weighted_average));
        push("average_uniform", "", format!("{:.6}", self.uniform_average));
        push("video_accuracy", "", format!("{:.6}", self.video_accuracy));
        push("precision", "", format!("{:.6}", self.precision));
        push("recall", "", format!("{:.6}", self.recall));
        push("f1", "", format!("{:.6}", self.f1));
        push("ap", "", format!("{:.6}", self.average_precision));
        let c = self.confusion;
        for (k, v) in [("tp", c.tp), ("fp", c.fp), ("tn", c.tn), ("fn", c.fn_)] {
            push("confusion", k, v.to_string());
        }
        csv_string(rows)
    }

    /// `id,label,generator,prompt_modality,score,predicted` per test video.
    pub fn predictions_csv(&self) -> String {
        let mut rows = vec![["id", "label", "generator", "prompt_modality", "score", "predicted"].map(String::from).to_vec()];
        for p in self.predictions.rows() {
            rows.push(vec![
                p.id.clone(),
                p.label.to_string(),
                p.generator.clone(),
                p.modality.to_string(),
                format!("{:.6}", p.score),
                p.predicted.to_string(),
            ]);
        }
        csv_string(rows)
    }
}

/// Accuracy matrix of the cross-prompt protocol: rows are training
/// modalities, columns the three test modalities plus their average.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPromptReport {
    pub detector: String,
    pub seed: u64,
    pub modalities: [PromptModality; 3],
    pub test_sizes: [usize; 3],
    /// Last column is weighted by `test_sizes`.
    pub matrix: [[f64; 4]; 3],
    pub uniform_average: [f64; 3],
}

impl CrossPromptReport {
    pub fn columns(&self) -> [String; 4] {
        let m = self.modalities;
        [m[0].to_string(), m[1].to_string(), m[2].to_string(), "Avg.".to_string()]
    }

    pub fn off_diagonal(&self) -> Vec<f64> {
        (0..3).flat_map(|i| (0..3).filter(move |j| *j != i).map(move |j| self.matrix[i][j])).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "protocol: {CROSS_PROMPT_ID}  detector: {}  seed: {}", self.detector, self.seed);
        let _ = writeln!(s, "accuracy (%) on fake test videos; rows = training prompt");
        let cols = self.columns();
        let _ = writeln!(s, "{:<8} {:>8} {:>8} {:>8} {:>8} {:>12}", "train", cols[0], cols[1], cols[2], cols[3], "uniform avg");
        for (i, m) in self.modalities.iter().enumerate() {
            let r = self.matrix[i];
            let _ = writeln!(s, "{:<8} {:>8} {:>8} {:>8} {:>8} {:>12}", m.as_str(), pct(r[0]), pct(r[1]), pct(r[2]), pct(r[3]), pct(self.uniform_average[i]));
        }
        let _ = writeln!(s, "test sizes: {} {}, {} {}, {} {}", cols[0], self.test_sizes[0], cols[1], self.test_sizes[1], cols[2], self.test_sizes[2]);
        s
    }

    /// The matrix with a header row `train,T2V,I2V,V2V,Avg.,uniform_avg`.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["train".to_string()];
        header.extend(self.columns());
        header.push("uniform_avg".into());
        let mut rows = vec![header];
        for (i, m) in self.modalities.iter().enumerate() {
            let mut row = vec![m.to_string()];
            row.extend(self.matrix[i].iter().map(|v| format!("{v:.6}")));
            row.push(format!("{:.6}", self.uniform_average[i]));
            rows.push(row);
        }
        csv_string(rows)
    }
}
