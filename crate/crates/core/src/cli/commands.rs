use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fold_assignment, Classify, CliError, CrossvalArgs, DetectArgs, EvaluateArgs, ExperimentConfig, ExtractArgs, FixtureArgs, PredictArgs};
use crate::dsp::{save_record, FeatureExtractor, FeatureRecord};
use crate::error::{Error, Result};
use crate::evalx::{
    coco_thresholds, confusion_on, cross_validate, load_detection_dirs, map_range,
    CrossValConfig, EvalReport,
};
use crate::ingest::{load_wav, make_split, DatasetManifest, LabelScheme, SplitPlan};
use crate::models::{RecipeConfig, RecipeKind};
use crate::nn::{load_model, save_model, History, NetworkGraph, PRIMARY_OUTPUT};
use crate::pipeline::{check_compatible, load_dataset, sample_tensors};
use crate::synthetic::{write_fixture, FixtureConfig};

const LOCK_FILE: &str = ".hivesense.lock";

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::State(format!(
                "output directory {} is in use (remove {} if no command is running)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn load_manifest(cfg: &ExperimentConfig) -> Result<DatasetManifest> {
    let p = cfg.manifest_path()?;
    if !p.is_file() {
        return Err(Error::Validation(format!("manifest {} does not exist", p.display())));
    }
    DatasetManifest::load(&p)
}

/// Sidecar holding the recipe a model file was built from.
pub fn recipe_path(model: &Path) -> PathBuf {
    model.with_extension("recipe.json")
}

fn class_names(kind: RecipeKind) -> &'static [&'static str] {
    match kind.n_classes() {
        2 => LabelScheme::BeePresence.class_names(),
        _ => LabelScheme::Health.class_names(),
    }
}

fn history_csv(h: &History) -> String {
    let mut s = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n".to_string();
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
    for e in &h.epochs {
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{},{}",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            opt(e.val_loss),
            opt(e.val_accuracy)
        );
    }
    s
}

pub(super) fn extract(cfg: &ExperimentConfig, args: &ExtractArgs) -> Result<(), CliError> {
    let manifest = load_manifest(cfg).invalid()?;
    if cfg.features.is_empty() {
        return Err(CliError::Validation(Error::Validation("no feature kinds requested".into())));
    }
    let out = cfg.output_dir("extract");
    let _lock = OutputLock::acquire(&out).runtime()?;
    let dir = out.join("features");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e)).runtime()?;
    let fx = FeatureExtractor::default();
    let clips: Vec<_> = manifest.entries().iter().filter(|e| e.audio.is_some()).collect();
    let results: Vec<Result<usize>> = clips
        .par_iter()
        .map(|e| {
            let clip = load_wav(&manifest.resolve(e.audio.as_deref().expect("filtered")))?;
            let mut n = 0;
            for &kind in &cfg.features {
                let m = fx.matrix(&clip, kind)?;
                if args.vectors {
                    let v = crate::dsp::condense(&m, kind)?;
                    save_record(&FeatureRecord::Vector(v), &dir.join(format!("{}.{kind}.vec.hfeat", e.id)))?;
                    n += 1;
                }
                save_record(&FeatureRecord::Matrix { kind, matrix: m }, &dir.join(format!("{}.{kind}.hfeat", e.id)))?;
                n += 1;
            }
            Ok(n)
        })
        .collect();
    let mut written = 0;
    let mut failed = 0;
    for (e, r) in clips.iter().zip(results) {
        match r {
            Ok(n) => written += n,
            Err(err) => {
                log::warn!("skipping {}: {err}", e.id);
                failed += 1;
            }
        }
    }
    println!("wrote {written} feature records to {} ({failed} clips failed)", dir.display());
    if failed > 0 && failed == clips.len() {
        return Err(CliError::Runtime(Error::EmptyInput("every clip failed to load".into())));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainSummary {
    recipe: String,
    epochs_run: usize,
    best_epoch: usize,
    stopped_early: bool,
    test_accuracy: f64,
}

pub(super) fn train(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let seed = cfg.require_seed().invalid()?;
    cfg.fit.validate().invalid()?;
    let manifest = load_manifest(cfg).invalid()?;
    check_compatible(&manifest, &cfg.recipe).invalid()?;
    let split = make_split(&manifest, seed).invalid()?;
    let mut model = cfg.recipe.build().invalid()?;
    let out = cfg.output_dir("train");
    let _lock = OutputLock::acquire(&out).runtime()?;
    write_file(&out.join("config.toml"), cfg.to_toml()).runtime()?;

    let data = load_dataset(&manifest, &cfg.recipe, &FeatureExtractor::default()).runtime()?;
    let train_set = data.select(&split.train_ids).runtime()?;
    let val_set = data.select(&split.val_ids).runtime()?;
    let test_set = data.select(&split.test_ids).runtime()?;
    let history = cfg.fit.fit(&mut model, &train_set, Some(&val_set)).runtime()?;
    let names = manifest.scheme().class_names();
    let cm = confusion_on(&model, &test_set, names, cfg.fit.train.batch_size).runtime()?;
    let report = EvalReport::from_confusion(cfg.recipe.kind.name(), cm).runtime()?;

    let model_path = out.join("model.hnet");
    save_model(&model.graph, &model_path).runtime()?;
    write_file(&recipe_path(&model_path), serde_json::to_string_pretty(&cfg.recipe).expect("serializable")).runtime()?;
    write_file(&out.join("split.json"), serde_json::to_string_pretty(&split).expect("serializable")).runtime()?;
    write_file(&out.join("history.csv"), history_csv(&history)).runtime()?;
    report.write(&out, "report").runtime()?;
    let summary = TrainSummary {
        recipe: cfg.recipe.kind.name().into(),
        epochs_run: history.epochs.len(),
        best_epoch: history.best_epoch,
        stopped_early: history.stopped_early,
        test_accuracy: report.metrics.accuracy,
    };
    write_file(&out.join("summary.json"), serde_json::to_string_pretty(&summary).expect("serializable")).runtime()?;
    print!("{}", report.to_text());
    println!("model written to {}", model_path.display());
    Ok(())
}

fn load_recipe_model(model: &Path) -> Result<(RecipeConfig, NetworkGraph)> {
    let rp = recipe_path(model);
    let text = std::fs::read_to_string(&rp)
        .map_err(|e| Error::Validation(format!("cannot read recipe sidecar {}: {e}", rp.display())))?;
    let recipe: RecipeConfig =
        serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", rp.display())))?;
    let graph = load_model(model)?;
    let built = recipe.build()?;
    if built.graph.topology().nodes != graph.topology().nodes || built.graph.inputs() != graph.inputs() {
        return Err(Error::Validation(format!(
            "model {} does not match its recipe sidecar",
            model.display()
        )));
    }
    Ok((recipe, graph))
}

pub(super) fn evaluate(cfg: &ExperimentConfig, args: &EvaluateArgs) -> Result<(), CliError> {
    let (recipe, graph) = load_recipe_model(&args.model).invalid()?;
    let manifest = load_manifest(cfg).invalid()?;
    check_compatible(&manifest, &recipe).invalid()?;
    let ids: Vec<String> = match &args.split {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e)).invalid()?;
            let plan: SplitPlan = serde_json::from_str(&text)
                .map_err(|e| Error::Validation(format!("{}: {e}", p.display())))
                .invalid()?;
            plan.test_ids
        }
        None => manifest.entries().iter().map(|e| e.id.clone()).collect(),
    };
    manifest.select(&ids).invalid()?;
    let out = cfg.output_dir("evaluate");
    let _lock = OutputLock::acquire(&out).runtime()?;
    let data = load_dataset(&manifest, &recipe, &FeatureExtractor::default()).runtime()?;
    let set = data.select(&ids).runtime()?;
    let model = crate::models::ModelRecipe { kind: recipe.kind, graph };
    let cm = confusion_on(&model, &set, manifest.scheme().class_names(), cfg.fit.train.batch_size).runtime()?;
    let report = EvalReport::from_confusion(recipe.kind.name(), cm).runtime()?;
    report.write(&out, "evaluation").runtime()?;
    print!("{}", report.to_text());
    Ok(())
}

pub(super) fn crossval(cfg: &ExperimentConfig, args: &CrossvalArgs) -> Result<(), CliError> {
    let seed = cfg.require_seed().invalid()?;
    cfg.fit.validate().invalid()?;
    let manifest = load_manifest(cfg).invalid()?;
    check_compatible(&manifest, &cfg.recipe).invalid()?;
    cfg.recipe.build().invalid()?;
    crate::ingest::make_kfold_with(&manifest, cfg.k, seed, fold_assignment(cfg)).invalid()?;
    let out = cfg.output_dir("crossval");
    let _lock = OutputLock::acquire(&out).runtime()?;
    write_file(&out.join("config.toml"), cfg.to_toml()).runtime()?;
    let data = load_dataset(&manifest, &cfg.recipe, &FeatureExtractor::default()).runtime()?;
    let cv = CrossValConfig {
        k: cfg.k,
        seed,
        assignment: fold_assignment(cfg),
        fit: cfg.fit.clone(),
        parallel: !args.sequential,
    };
    let report = cross_validate(&cfg.recipe, &manifest, &data, &cv).runtime()?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    report.write(&out, "crossval").runtime()?;
    print!("{}", report.to_text());
    Ok(())
}

pub(super) fn detect_eval(cfg: &ExperimentConfig, args: &DetectArgs) -> Result<(), CliError> {
    let pick = |explicit: &Option<PathBuf>, sub: &str| -> Result<PathBuf> {
        let p = match (explicit, &cfg.dataset) {
            (Some(p), _) => p.clone(),
            (None, Some(d)) => d.join(sub),
            (None, None) => return Err(Error::Validation(format!("no {sub} directory given"))),
        };
        if !p.is_dir() {
            return Err(Error::Validation(format!("{} is not a directory", p.display())));
        }
        Ok(p)
    };
    let labels = pick(&args.labels, "labels").invalid()?;
    let preds_dir = pick(&args.predictions, "predictions").invalid()?;
    let (preds, truths) = load_detection_dirs(&labels, &preds_dir).invalid()?;
    let out = cfg.output_dir("detect-eval");
    let _lock = OutputLock::acquire(&out).runtime()?;
    let summary = map_range(&preds, &truths, &coco_thresholds()).runtime()?;
    let mut csv = "iou_threshold,map\n".to_string();
    for (t, m) in &summary.per_threshold {
        let _ = writeln!(csv, "{t:.2},{m:.6}");
    }
    let text = format!(
        "{:<12} {:>10} {:>14}\n{:<12} {:>10} {:>14}\n{} predictions, {} ground-truth boxes\n",
        "Model",
        "mAP@50",
        "mAP@[.5:.95]",
        "detections",
        format!("{:.2}%", 100.0 * summary.map50),
        format!("{:.2}%", 100.0 * summary.map_range),
        preds.len(),
        truths.len()
    );
    write_file(&out.join("detection.csv"), csv).runtime()?;
    write_file(&out.join("detection.txt"), &text).runtime()?;
    write_file(&out.join("detection.json"), serde_json::to_string_pretty(&summary).expect("serializable")).runtime()?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct Prediction<'a> {
    class: &'a str,
    probabilities: Vec<ClassProbability<'a>>,
}

#[derive(Debug, Serialize)]
struct ClassProbability<'a> {
    class: &'a str,
    probability: f64,
}

pub(super) fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let (recipe, graph) = load_recipe_model(&args.model).invalid()?;
    let fx = FeatureExtractor::default();
    let inputs = sample_tensors(args.image.as_deref(), args.audio.as_deref(), &recipe, &fx).invalid()?;
    let refs: Vec<_> = inputs.iter().map(|(n, t)| (n.as_str(), t)).collect();
    let out = graph.predict(&refs).runtime()?;
    let probs = out
        .get(PRIMARY_OUTPUT)
        .ok_or_else(|| Error::State("model has no probability output".into()))
        .runtime()?;
    let names = class_names(recipe.kind);
    let row = probs.row(0);
    let best = crate::nn::tensor::argmax(row);
    let p = Prediction {
        class: names[best],
        probabilities: names
            .iter()
            .zip(row)
            .map(|(&class, &probability)| ClassProbability { class, probability })
            .collect(),
    };
    println!("{}", serde_json::to_string_pretty(&p).expect("serializable"));
    Ok(())
}

pub(super) fn fixture(cfg: &ExperimentConfig, args: &FixtureArgs) -> Result<(), CliError> {
    let fc = FixtureConfig {
        per_class: args.per_class,
        seed: args.seed,
        ..FixtureConfig::default()
    };
    if fc.per_class == 0 {
        return Err(CliError::Validation(Error::Validation("per-class count must be positive".into())));
    }
    let out = cfg.output_dir("fixture");
    let _lock = OutputLock::acquire(&out).runtime()?;
    let s = write_fixture(&out, &fc).runtime()?;
    println!(
        "wrote {} health samples and {} bee-presence clips to {}",
        s.health.len(),
        s.bee.len(),
        out.display()
    );
    Ok(())
}
