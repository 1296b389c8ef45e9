use proptest::prelude::*;
use viewspan::eval::*;
use viewspan::io::{Label, PromptModality, Split, VideoData};
use viewspan::synth::{make_corpus, Corpus, CorpusConfig};

/// Counts precision and recall at every distinct threshold from scratch.
fn brute_force_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let positives = labels.iter().filter(|l| **l).count() as f64;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l).count() as f64;
        let predicted = scores.iter().filter(|s| **s >= t).count() as f64;
        let recall = tp / positives;
        ap += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    ap
}

fn prediction_sets() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..=50).prop_flat_map(|n| {
        // coarse score grid so that ties are common
        (prop::collection::vec(0u8..=20, n), prop::collection::vec(any::<bool>(), n))
            .prop_map(|(s, l)| (s.into_iter().map(|v| v as f64 / 20.0).collect(), l))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ap_matches_brute_force((scores, mut labels) in prediction_sets()) {
        if !labels.iter().any(|l| *l) {
            labels[0] = true;
        }
        let ap = average_precision(&scores, &labels).unwrap();
        prop_assert!((ap - brute_force_ap(&scores, &labels)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ap));
    }

    #[test]
    fn ap_ignores_row_order((scores, mut labels) in prediction_sets(), rot in 0usize..50) {
        if !labels.iter().any(|l| *l) {
            labels[0] = true;
        }
        let k = rot % scores.len();
        let (mut s2, mut l2) = (scores.clone(), labels.clone());
        s2.rotate_left(k);
        l2.rotate_left(k);
        let a = average_precision(&scores, &labels).unwrap();
        let b = average_precision(&s2, &l2).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn f1_lies_between_precision_and_recall(tp in 0usize..40, fp in 0usize..40, tn in 0usize..40, fn_ in 0usize..40) {
        prop_assume!(tp + fn_ > 0);
        let c = Confusion { tp, fp, tn, fn_ };
        let (p, r, f1) = (c.precision(), c.recall().unwrap(), c.f1().unwrap());
        // brute-force recount of the harmonic mean
        let expected = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
        prop_assert!((f1 - expected).abs() < 1e-12);
        if p > 0.0 && r > 0.0 {
            prop_assert!(f1 >= p.min(r) - 1e-12 && f1 <= p.max(r) + 1e-12);
            prop_assert!(f1 <= 2.0 * p.min(r) + 1e-12);
        }
    }
}

#[test]
fn ap_tied_scores_give_positive_rate() {
    let labels = [true, false, false, true, false, true, false, false];
    let ap = average_precision(&[0.3; 8], &labels).unwrap();
    assert!((ap - 3.0 / 8.0).abs() < 1e-15);
}

fn pred(id: &str, label: Label, generator: &str, predicted: Label) -> Prediction {
    Prediction {
        id: id.into(),
        label,
        generator: generator.into(),
        modality: if label.is_fake() { PromptModality::T2V } else { PromptModality::None },
        score: if predicted.is_fake() { 0.9 } else { 0.1 },
        predicted,
    }
}

#[test]
fn generator_accuracy_counts_only_that_generators_fakes() {
    use Label::*;
    let set = PredictionSet::new(vec![
        pred("a", Fake, "g1", Fake),
        pred("b", Fake, "g1", Fake),
        pred("c", Fake, "g1", Fake),
        pred("d", Fake, "g1", Real),
        pred("e", Fake, "g2", Real),
        pred("f", Real, "real", Fake),
        pred("g", Real, "g1", Fake),
    ])
    .unwrap();
    let g1 = set.generator_fakes("g1");
    assert_eq!(g1.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c", "d"]);
    assert_eq!(accuracy(&g1).unwrap(), 0.75);
    assert_eq!(accuracy(&set.generator_fakes("g2")).unwrap(), 0.0);
    assert_eq!(accuracy(&[]), Err(EvalError::Empty));
}

#[test]
fn prediction_set_rejects_bad_rows() {
    let mut a = pred("a", Label::Fake, "g", Label::Fake);
    assert!(PredictionSet::new(vec![a.clone(), a.clone()]).is_err());
    a.score = 1.5;
    assert!(matches!(PredictionSet::new(vec![a]), Err(EvalError::ScoreRange { .. })));
}

fn three_family_corpus(seed: u64) -> Corpus {
    let mut cfg = CorpusConfig::standard();
    cfg.families.truncate(3);
    make_corpus(10, 15, &cfg, seed).unwrap()
}

/// Looks each test video up among the corpus sequences.
struct Oracle(Vec<(VideoData, Label)>);

struct OracleScorer(Vec<(VideoData, Label)>);

impl VideoScorer for OracleScorer {
    fn score(&self, video: &VideoData) -> Result<f64, EvalError> {
        let label = self.0.iter().find(|(v, _)| v == video).map(|(_, l)| *l).expect("video in corpus");
        Ok(if label.is_fake() { 1.0 } else { 0.0 })
    }

    fn threshold(&self) -> f64 {
        0.5
    }
}

impl Detector for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn fit(&self, _train: &[(VideoData, Label)]) -> Result<Box<dyn VideoScorer>, EvalError> {
        Ok(Box::new(OracleScorer(self.0.clone())))
    }
}

fn oracle_for(corpus: &Corpus) -> Oracle {
    Oracle(corpus.sequences.values().map(|s| (s.to_video(), s.label)).collect())
}

#[test]
fn train_on_one_family_reports_the_others() {
    let corpus = three_family_corpus(3);
    let scope = TrainScope::Generator("texture-drift".into());
    let report = run_train_test_protocol(&corpus.manifest, &corpus, &ResidualBaseline, &scope, 3).unwrap();
    assert_eq!(report.train_strata, ["texture-drift"]);
    assert_eq!(report.test_strata, ["flicker", "geometry-jitter"]);
    let held: Vec<_> = report.per_generator.iter().filter(|g| g.held_out).map(|g| g.generator.as_str()).collect();
    assert_eq!(held, ["flicker", "geometry-jitter"]);

    // the overall figure is the size-weighted mean of the held-out rows
    let (num, den) = report
        .per_generator
        .iter()
        .filter(|g| g.held_out)
        .fold((0.0, 0usize), |(n, d), g| (n + g.accuracy * g.n_test as f64, d + g.n_test));
    assert!((report.weighted_average - num / den as f64).abs() < 1e-15);

    let n_test = corpus.manifest.rows.iter().filter(|r| r.split == Split::Test).count();
    assert_eq!(report.predictions.len(), n_test);
    let trained_fakes = report.predictions.generator_fakes("texture-drift").len();
    assert_eq!(report.confusion.total(), n_test - trained_fakes);
    for v in [report.recall, report.f1, report.average_precision, report.precision, report.video_accuracy] {
        assert!((0.0..=1.0).contains(&v));
    }
    let again = run_train_test_protocol(&corpus.manifest, &corpus, &ResidualBaseline, &scope, 3).unwrap();
    assert_eq!(again, report);
}

#[test]
fn protocols_reject_incomplete_manifests() {
    let corpus = three_family_corpus(4);
    let unknown = TrainScope::Generator("nope".into());
    assert_eq!(
        run_train_test_protocol(&corpus.manifest, &corpus, &ResidualBaseline, &unknown, 0),
        Err(EvalError::UnknownGenerator("nope".into()))
    );

    let mut no_real = corpus.manifest.clone();
    no_real.rows.retain(|r| r.label.is_fake() || r.split == Split::Test);
    assert_eq!(
        run_train_test_protocol(&no_real, &corpus, &ResidualBaseline, &TrainScope::AllGenerators, 0),
        Err(EvalError::MissingReal("train"))
    );

    let mut one_family = corpus.manifest.clone();
    one_family.rows.retain(|r| !r.label.is_fake() || r.generator == "flicker");
    assert_eq!(
        run_train_test_protocol(&one_family, &corpus, &ResidualBaseline, &TrainScope::AllGenerators, 0),
        Err(EvalError::TooFewGenerators(1))
    );

    let mut no_v2v = corpus.manifest.clone();
    no_v2v.rows.retain(|r| r.prompt_modality != PromptModality::V2V);
    assert_eq!(
        run_cross_prompt_protocol(&no_v2v, &corpus, &ResidualBaseline, 0),
        Err(EvalError::MissingModality { modality: PromptModality::V2V, split: Split::Train })
    );
}

#[test]
fn perfect_detector_fills_the_cross_prompt_matrix_with_ones() {
    let corpus = three_family_corpus(5);
    let report = run_cross_prompt_protocol(&corpus.manifest, &corpus, &oracle_for(&corpus), 5).unwrap();
    assert_eq!(report.columns(), ["T2V", "I2V", "V2V", "Avg."]);
    assert!(report.matrix.iter().flatten().all(|v| *v == 1.0));
    assert_eq!(report.off_diagonal().len(), 6);
    let csv = report.to_csv();
    assert_eq!(csv.lines().next().unwrap(), "train,T2V,I2V,V2V,Avg.,uniform_avg");
    assert_eq!(csv.lines().count(), 4);

    let tt = run_train_test_protocol(&corpus.manifest, &corpus, &oracle_for(&corpus), &TrainScope::AllGenerators, 5)
        .unwrap();
    assert_eq!((tt.video_accuracy, tt.f1, tt.average_precision), (1.0, 1.0, 1.0));
    assert!(tt.to_text().contains("average (weighted)"));
    assert!(tt.to_csv().starts_with("metric,key,value\n"));
}

#[test]
fn cross_prompt_average_column_is_size_weighted() {
    let corpus = three_family_corpus(6);
    let report = run_cross_prompt_protocol(&corpus.manifest, &corpus, &ResidualBaseline, 6).unwrap();
    let n: usize = report.test_sizes.iter().sum();
    for row in report.matrix {
        let weighted = (0..3).map(|j| row[j] * report.test_sizes[j] as f64).sum::<f64>() / n as f64;
        assert!((row[3] - weighted).abs() < 1e-15);
    }
}
