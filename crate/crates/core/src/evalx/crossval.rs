//! Training settings and k-fold cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classification::{classification_metrics, ConfusionMatrix};
use super::report::{EvalReport, FoldResult};
use crate::dsp::FeatureExtractor;
use crate::error::{Error, Result};
use crate::ingest::{make_kfold_with, DatasetManifest, FoldAssignment};
use crate::models::{ModelRecipe, RecipeConfig, RecipeKind};
use crate::nn::{predict_proba, train, Dataset, History, LossSpec, OptimizerKind, OptimizerState, TrainConfig};
use crate::pipeline::{load_dataset, LoadedData};
use crate::rng::SplitMix64;

/// Optimizer, loss weights and training loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub train: TrainConfig,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub lambda_image: f64,
    pub lambda_sound: f64,
}

impl Default for FitConfig {
    /// Adam at 1e-4, 20 epochs, batch 64, patience 5, λ = 0.5 each.
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            optimizer: OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            learning_rate: 1e-4,
            lambda_image: 0.5,
            lambda_sound: 0.5,
        }
    }
}

impl FitConfig {
    pub fn loss_for(&self, kind: RecipeKind) -> Result<LossSpec> {
        match kind {
            RecipeKind::Amnn => LossSpec::multimodal(self.lambda_image, self.lambda_sound),
            _ => Ok(LossSpec::CrossEntropy),
        }
    }

    pub fn validate(&self) -> Result<()> {
        OptimizerState::new(self.optimizer, self.learning_rate)?;
        LossSpec::multimodal(self.lambda_image, self.lambda_sound)?;
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return Err(Error::param("epochs and batch size must be positive"));
        }
        Ok(())
    }

    /// Trains `recipe` with a fresh optimizer.
    pub fn fit(&self, recipe: &mut ModelRecipe, train_set: &Dataset, val: Option<&Dataset>) -> Result<History> {
        let loss = self.loss_for(recipe.kind)?;
        let mut opt = OptimizerState::new(self.optimizer, self.learning_rate)?;
        train(&mut recipe.graph, train_set, val, &loss, &mut opt, &self.train)
    }
}

/// Predicted class per sample (first maximum).
pub fn predict_labels(recipe: &ModelRecipe, data: &Dataset, batch_size: usize) -> Result<Vec<usize>> {
    Ok(predict_proba(&recipe.graph, data, batch_size.max(1))?.argmax_rows())
}

/// Confusion matrix of `recipe` on `data`.
pub fn confusion_on(recipe: &ModelRecipe, data: &Dataset, class_names: &[&str], batch_size: usize) -> Result<ConfusionMatrix> {
    let pred = predict_labels(recipe, data, batch_size)?;
    ConfusionMatrix::from_predictions(class_names, data.labels(), &pred)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossValConfig {
    pub k: usize,
    pub seed: u64,
    pub assignment: FoldAssignment,
    pub fit: FitConfig,
    /// Train folds concurrently.
    pub parallel: bool,
}

impl Default for CrossValConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            assignment: FoldAssignment::Stratified,
            fit: FitConfig::default(),
            parallel: true,
        }
    }
}

/// Per-fold seed for initialization and batch order.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    SplitMix64::new(seed).fork(fold as u64).next_u64()
}

/// Loads `manifest` for `recipe` and cross-validates.
pub fn run_cross_validation(recipe: &RecipeConfig, manifest: &DatasetManifest, cfg: &CrossValConfig) -> Result<EvalReport> {
    let data = load_dataset(manifest, recipe, &FeatureExtractor::default())?;
    cross_validate(recipe, manifest, &data, cfg)
}

/// k models, each trained on k−1 folds (no validation set, so early
/// stopping watches training loss) and tested on the held-out fold. Folds
/// may train in parallel; results are assembled in fold order.
pub fn cross_validate(recipe: &RecipeConfig, manifest: &DatasetManifest, data: &LoadedData, cfg: &CrossValConfig) -> Result<EvalReport> {
    cfg.fit.validate()?;
    let plans = make_kfold_with(manifest, cfg.k, cfg.seed, cfg.assignment)?;
    let names = manifest.scheme().class_names();
    let run = |(fold, plan): (usize, &crate::ingest::SplitPlan)| -> Result<FoldResult> {
        let train_set = data.select(&plan.train_ids)?;
        let test_set = data.select(&plan.test_ids)?;
        let seed = fold_seed(cfg.seed, fold);
        let mut model = RecipeConfig { seed, ..recipe.clone() }.build()?;
        let fit = FitConfig {
            train: TrainConfig { seed, ..cfg.fit.train.clone() },
            ..cfg.fit.clone()
        };
        let history = fit.fit(&mut model, &train_set, None)?;
        let confusion = confusion_on(&model, &test_set, names, cfg.fit.train.batch_size)?;
        log::info!("fold {}/{}: {} epochs", fold + 1, cfg.k, history.epochs.len());
        Ok(FoldResult {
            fold,
            n_train: train_set.len(),
            metrics: classification_metrics(&confusion)?,
            confusion,
            epochs_run: history.epochs.len(),
        })
    };
    let folds: Vec<FoldResult> = if cfg.parallel {
        plans.par_iter().enumerate().map(run).collect::<Result<_>>()?
    } else {
        plans.iter().enumerate().map(run).collect::<Result<_>>()?
    };
    let mut warnings = Vec::new();
    for f in &folds {
        for (c, name) in names.iter().enumerate() {
            if f.confusion.support(c) == 0 {
                warnings.push(format!("fold {} has no test samples of class {name}", f.fold + 1));
            }
        }
    }
    let mut report = EvalReport::from_folds(recipe.kind.name(), folds)?;
    report.warnings = warnings;
    Ok(report)
}
