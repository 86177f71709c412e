mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::fixture_dir;

const BIN: &str = env!("CARGO_BIN_EXE_hivesense");

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("HIVESENSE_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn fixture() -> String {
    fixture_dir().to_string_lossy().into_owned()
}

const TRAIN: &[&str] = &[
    "--recipe",
    "visual-cnn",
    "--image-size",
    "16",
    "--width-divisor",
    "8",
    "--epochs",
    "4",
    "--batch-size",
    "8",
    "--lr",
    "0.003",
];

fn train(out: &Path, seed: &str) -> Output {
    let d = fixture();
    let mut args = vec!["train", "--dataset", d.as_str(), "--seed", seed];
    args.extend_from_slice(TRAIN);
    run(out, &args)
}

fn csv_row(path: &Path, first: &str) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| l.split(',').nth(1) == Some(first)).unwrap_or_else(|| panic!("no {first} row in {text}"));
    line.split(',').map(str::to_string).collect()
}

#[test]
fn train_is_deterministic_and_evaluate_reproduces_it() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&train(&a, "3")), 0);
    assert_eq!(code(&train(&b, "3")), 0);
    let bytes = |d: &Path| std::fs::read(d.join("model.hnet")).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    for f in ["model.recipe.json", "split.json", "history.csv", "report.csv", "report.txt", "report.json", "config.toml"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let history = std::fs::read_to_string(a.join("history.csv")).unwrap();
    assert!(history.lines().count() - 1 <= 4);

    let ev = tmp.path().join("ev");
    let model = a.join("model.hnet");
    let split = a.join("split.json");
    let d = fixture();
    let o = run(
        &ev,
        &["evaluate", "--dataset", &d, "--model", model.to_str().unwrap(), "--split", split.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_row(&a.join("report.csv"), "test"), csv_row(&ev.join("evaluation.csv"), "test"));
    let header = std::fs::read_to_string(ev.join("evaluation.csv")).unwrap();
    assert!(header.starts_with("model,fold,n_test,accuracy,precision,recall,f1,f1_healthy,"));
}

#[test]
fn validation_failures_exit_one_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let d = fixture();
    // no seed
    let mut args = vec!["train", "--dataset", d.as_str()];
    args.extend_from_slice(TRAIN);
    assert_eq!(code(&run(&out, &args)), 1);
    // missing manifest
    assert_eq!(code(&run(&out, &["train", "--dataset", "/nonexistent", "--seed", "1"])), 1);
    // bee-presence manifest under a health recipe
    let mut args = vec!["train", "--dataset", d.as_str(), "--manifest", "manifest_bee", "--seed", "1"];
    args.extend_from_slice(TRAIN);
    assert_eq!(code(&run(&out, &args)), 1);
    // image recipe on an audio-only manifest
    let mut args = vec!["crossval", "--dataset", d.as_str(), "--manifest", "manifest_bee", "--seed", "1"];
    args.extend_from_slice(TRAIN);
    assert_eq!(code(&run(&out, &args)), 1);
    // unknown subcommand and bad flag values are usage errors
    assert_eq!(code(&run(&out, &["frobnicate"])), 1);
    assert_eq!(code(&run(&out, &["train", "--recipe", "nope"])), 1);
    assert!(!out.exists());
}

#[test]
fn version_mismatched_model_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(code(&train(&a, "1")), 0);
    let model = a.join("model.hnet");
    let mut bytes = std::fs::read(&model).unwrap();
    // the format version follows the 8-byte magic
    bytes[8] ^= 0x7f;
    std::fs::write(&model, bytes).unwrap();
    let d = fixture();
    let o = run(&tmp.path().join("ev"), &["evaluate", "--dataset", &d, "--model", model.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("version"));
}

#[test]
fn locked_output_directory_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join(".hivesense.lock"), "").unwrap();
    let d = fixture();
    let o = run(&out, &["detect-eval", "--dataset", &d]);
    assert_eq!(code(&o), 2);
    assert!(!out.join("detection.csv").exists());
}

fn clip_manifest(dir: &Path, clips: &[&str]) -> PathBuf {
    let mut text = String::from("#scheme: bee_presence\n");
    for (i, c) in clips.iter().enumerate() {
        text.push_str(&format!("c{i}\t-\t{c}\t{}\n", ["nobee", "bee"][i % 2]));
    }
    let p = dir.join("manifest");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn extract_writes_one_record_per_clip_and_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let src = fixture_dir().join("audio");
    for i in 0..3 {
        std::fs::copy(src.join(format!("b{i:03}.wav")), tmp.path().join(format!("c{i}.wav"))).unwrap();
    }
    let m = clip_manifest(tmp.path(), &["c0.wav", "c1.wav", "c2.wav"]);
    let out = tmp.path().join("out");
    let o = run(&out, &["extract", "--manifest", m.to_str().unwrap(), "--features", "stft,chroma"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let n = std::fs::read_dir(out.join("features")).unwrap().count();
    assert_eq!(n, 6);
    let rec = hivesense::dsp::load_record(&out.join("features").join("c1.chroma.hfeat")).unwrap();
    match rec {
        hivesense::dsp::FeatureRecord::Matrix { matrix, .. } => assert_eq!((matrix.rows, matrix.frames), (12, 860)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn extract_skips_bad_clips_and_fails_when_none_load() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::copy(fixture_dir().join("audio").join("b000.wav"), tmp.path().join("good.wav")).unwrap();
    std::fs::write(tmp.path().join("bad.wav"), b"not a wav file").unwrap();
    let m = clip_manifest(tmp.path(), &["good.wav", "bad.wav"]);
    let out = tmp.path().join("mixed");
    assert_eq!(code(&run(&out, &["extract", "--manifest", m.to_str().unwrap(), "--features", "mel"])), 0);
    assert_eq!(std::fs::read_dir(out.join("features")).unwrap().count(), 1);

    let m = clip_manifest(tmp.path(), &["bad.wav"]);
    assert_eq!(code(&run(&tmp.path().join("none"), &["extract", "--manifest", m.to_str().unwrap(), "--features", "mel"])), 2);
}

#[test]
fn crossval_reports_folds_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = fixture();
    let go = |out: &Path| {
        let mut args = vec!["crossval", "--dataset", d.as_str(), "--seed", "4", "--epochs", "2"];
        args.extend_from_slice(&TRAIN[..6]);
        run(out, &args)
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&go(&a)), 0);
    assert_eq!(code(&go(&b)), 0);
    let csv = std::fs::read_to_string(a.join("crossval.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.join("crossval.csv")).unwrap());
    let folds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(folds, ["1", "2", "3", "4", "5", "pooled", "mean", "std"]);
}

#[test]
fn detect_eval_reports_both_map_figures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("det");
    let d = fixture();
    let o = run(&out, &["detect-eval", "--dataset", &d]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("mAP@50") && text.contains("mAP@[.5:.95]"));
    let csv = std::fs::read_to_string(out.join("detection.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn predict_prints_a_distribution() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(code(&train(&a, "2")), 0);
    let img = fixture_dir().join("images").join("h003.png");
    let o = run(
        &tmp.path().join("p"),
        &["predict", "--model", a.join("model.hnet").to_str().unwrap(), "--image", img.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let total: f64 = v["probabilities"].as_array().unwrap().iter().map(|p| p["probability"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "dataset = {:?}\nseed = 9\n[recipe]\nkind = \"visual-cnn\"\nimage_size = 16\nwidth_divisor = 8\n[fit]\nlearning_rate = 0.003\n[fit.train]\nepochs = 3\nbatch_size = 8\n",
            fixture()
        ),
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = Command::new(BIN)
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "train", "--epochs", "1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
    let saved = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(saved.contains("seed = 9"));
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let d = fixture();
    let o = Command::new(BIN)
        .args(["detect-eval", "--dataset", &d])
        .env("HIVESENSE_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("detect-eval").join("detection.csv").is_file());
}
