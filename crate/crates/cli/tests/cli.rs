use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use viewspan::detector::{read_checkpoint, DetectorConfig, DetectorParams};
use viewspan::geometry::CameraIntrinsics;
use viewspan::io::{decode_frame, load_manifest, write_video};
use viewspan::synth::{Scene, SyntheticSequence, Trajectory};

fn viewspan(args: &[&str]) -> Output {
    viewspan_env(args, &[])
}

fn viewspan_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_viewspan"));
    cmd.args(args).env_remove("VIEWSPAN_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run viewspan")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir`, relative path and bytes, sorted.
fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn small_corpus(root: &Path, name: &str, seed: &str) -> PathBuf {
    let dir = root.join(name);
    let out = viewspan(&["synth", "--out", s(&dir), "--seed", seed, "--n-real", "12", "--n-fake", "12"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

#[test]
fn synth_defaults_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(code(&viewspan(&["synth", "--out", s(&a), "--seed", "4"])), 0);
    let manifest = load_manifest(&fs::read_to_string(a.join("manifest.csv")).unwrap()).unwrap();
    assert_eq!(manifest.len(), 160);
    assert!(!tmp.path().join("a.partial").exists());

    let b = tmp.path().join("b");
    assert_eq!(code(&viewspan(&["synth", "--out", s(&b), "--seed", "4"])), 0);
    assert_eq!(tree(&a), tree(&b));
    // rerunning over an existing corpus replaces it with identical bytes
    assert_eq!(code(&viewspan(&["synth", "--out", s(&b), "--seed", "4"])), 0);
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn synth_usage_and_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    assert_eq!(code(&viewspan(&["synth", "--out", s(&out), "--seed", "1", "--n-real", "0"])), 2);
    assert_eq!(code(&viewspan(&["synth", "--out", s(&out)])), 2);
    assert_eq!(code(&viewspan(&["synth", "-o", s(&out), "--seed", "1"])), 2);
    assert!(!out.exists());

    // a non-empty directory that is not a corpus is left alone
    let precious = tmp.path().join("precious");
    fs::create_dir(&precious).unwrap();
    fs::write(precious.join("notes.txt"), "keep").unwrap();
    assert_eq!(code(&viewspan(&["synth", "--out", s(&precious), "--seed", "1"])), 3);
    assert_eq!(fs::read_to_string(precious.join("notes.txt")).unwrap(), "keep");
}

#[test]
fn analyze_reports_every_pair_and_separates_fakes() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "corpus", "5");
    let out = tmp.path().join("analysis");
    let run = viewspan(&["analyze", "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let csv = fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert_eq!(csv.lines().count() - 1, 24 * 5);
    assert!(fs::read_to_string(out.join("summary.txt")).unwrap().contains("fake / real mean ratio"));

    let heat_mean = |id: &str, t: usize| {
        let f = decode_frame(&fs::read(out.join("heatmaps").join(format!("{id}_pair_{t:03}.frm"))).unwrap()).unwrap();
        f.data().iter().sum::<f64>() / f.data().len() as f64
    };
    let manifest = load_manifest(&fs::read_to_string(corpus.join("manifest.csv")).unwrap()).unwrap();
    let (mut real, mut fake) = (vec![], vec![]);
    for row in &manifest.rows {
        for t in 1..=5 {
            if row.label.is_fake() { &mut fake } else { &mut real }.push(heat_mean(&row.id, t));
        }
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(real.iter().all(|m| *m < 0.01), "real heatmaps should be nearly black");
    assert!(avg(&fake) >= 5.0 * avg(&real));
    let pgm = fs::read(out.join("heatmaps/seq_0000_pair_001.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 32\n255\n"));

    let again = tmp.path().join("again");
    let run = viewspan_env(&["analyze", "--corpus", s(&corpus), "--out", s(&again)], &[("VIEWSPAN_THREADS", "1")]);
    assert_eq!(code(&run), 0);
    assert_eq!(tree(&out), tree(&again));

    let bad = viewspan_env(&["analyze", "--corpus", s(&corpus), "--out", s(&again)], &[("VIEWSPAN_THREADS", "lots")]);
    assert_eq!(code(&bad), 2);
    fs::remove_file(corpus.join("seq_0003/pair_002.pmap")).unwrap();
    let missing = viewspan(&["analyze", "--corpus", s(&corpus), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(code(&missing), 3);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing pair record for t = 2"));
}

#[test]
fn zero_learning_rate_checkpoint_is_the_initialization() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "corpus", "6");
    let ck = tmp.path().join("ck.prm");
    let run = viewspan(&["train", "--corpus", s(&corpus), "--checkpoint", s(&ck), "--seed", "11", "--lr", "0", "--epochs", "2"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let params = read_checkpoint(&fs::read(&ck).unwrap()).unwrap();
    assert_eq!(params, DetectorParams::init(DetectorConfig::default(), 11).rounded_to_f32());

    let bad = viewspan(&["train", "--corpus", s(&corpus), "--checkpoint", s(&ck), "--seed", "1", "--train-family", "nope"]);
    assert_eq!(code(&bad), 2);
    assert_eq!(code(&viewspan(&["train", "--corpus", s(&tmp.path().join("none")), "--checkpoint", s(&ck), "--seed", "1"])), 3);
}

#[test]
fn detect_scores_every_pair_of_a_ten_frame_video() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "corpus", "8");
    let ck = tmp.path().join("ck.prm");
    let loss = tmp.path().join("loss.csv");
    let run = viewspan(&[
        "train", "--corpus", s(&corpus), "--checkpoint", s(&ck), "--seed", "8", "--epochs", "5", "--out", s(&loss),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(fs::read_to_string(&loss).unwrap().lines().count(), 1 + 6);

    let scene = Scene::standard();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
    let poses = Trajectory::random(&mut rng).poses(&scene, 10);
    let k = CameraIntrinsics::centered(64.0, 32, 32).unwrap();
    let video = SyntheticSequence::render(scene, poses, k, 32, 32).unwrap().to_video();
    let dir = tmp.path().join("ten");
    write_video(&dir, &video).unwrap();

    let run = viewspan(&["detect", "--checkpoint", s(&ck), "--video", s(&dir)]);
    assert_eq!(code(&run), 0);
    let text = String::from_utf8(run.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,score,label");
    assert_eq!(lines.len(), 1 + 9 + 1);
    assert!(lines[10].starts_with("video,"));
    let frame_scores: Vec<f64> = lines[1..10].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let video_score: f64 = lines[10].split(',').nth(1).unwrap().parse().unwrap();
    assert!((frame_scores.iter().sum::<f64>() / 9.0 - video_score).abs() < 1e-8);

    let out = tmp.path().join("scores.csv");
    assert_eq!(code(&viewspan(&["detect", "--checkpoint", s(&ck), "--video", s(&dir), "--out", s(&out)])), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), text);

    assert_eq!(code(&viewspan(&["detect", "--checkpoint", s(&ck), "--video", s(&dir), "--threshold", "2"])), 2);
    assert_eq!(code(&viewspan(&["detect", "--checkpoint", s(&tmp.path().join("none")), "--video", s(&dir)])), 3);
    fs::write(tmp.path().join("junk.prm"), b"PMAP").unwrap();
    assert_eq!(code(&viewspan(&["detect", "--checkpoint", s(&tmp.path().join("junk.prm")), "--video", s(&dir)])), 3);
}

#[test]
fn eval_writes_reports_and_enforces_thresholds() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "corpus", "9");
    let reports = tmp.path().join("reports");
    let base = ["eval", "--corpus", s(&corpus), "--seed", "9", "--out", s(&reports), "--detector", "residual"];

    let cross: Vec<&str> = base.iter().copied().chain(["--protocol", "cross-prompt", "--min-off-diagonal", "0.5"]).collect();
    let run = viewspan(&cross);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let matrix = fs::read_to_string(reports.join("cross-prompt_residual-threshold_seed9.csv")).unwrap();
    let lines: Vec<&str> = matrix.lines().collect();
    assert_eq!(lines[0], "train,T2V,I2V,V2V,Avg.,uniform_avg");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));

    let strict: Vec<&str> = base.iter().copied().chain(["--protocol", "train-test", "--min-ap", "1.01"]).collect();
    assert_eq!(code(&viewspan(&strict)), 4);
    assert!(reports.join("train-test_residual-threshold_seed9.txt").is_file());
    assert!(reports.join("train-test_residual-threshold_seed9_predictions.csv").is_file());

    let mixed: Vec<&str> = base.iter().copied().chain(["--protocol", "train-test", "--min-off-diagonal", "0.5"]).collect();
    assert_eq!(code(&viewspan(&mixed)), 2);
    let held: Vec<&str> = base.iter().copied().chain(["--protocol", "train-test", "--train-family", "flicker"]).collect();
    assert_eq!(code(&viewspan(&held)), 0);
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "corpus", "10");
    let reports = tmp.path().join("reports");
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "corpus = {:?}\nout = {:?}\nseed = 5\nprotocol = \"train-test\"\ndetector = \"residual\"\n",
            s(&corpus),
            s(&reports)
        ),
    )
    .unwrap();
    assert_eq!(code(&viewspan(&["eval", "--config", s(&cfg)])), 0);
    assert!(reports.join("train-test_residual-threshold_seed5.csv").is_file());
    assert_eq!(code(&viewspan(&["eval", "--config", s(&cfg), "--seed", "3"])), 0);
    assert!(reports.join("train-test_residual-threshold_seed3.csv").is_file());

    fs::write(&cfg, "sede = 5\n").unwrap();
    assert_eq!(code(&viewspan(&["eval", "--config", s(&cfg)])), 2);
    assert_eq!(code(&viewspan(&["eval", "--config", s(&tmp.path().join("missing.toml"))])), 2);
}
