//! Wall-clock training and inference timing (monotonic clock).

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::crossval::FitConfig;
use crate::error::{Error, Result};
use crate::models::ModelRecipe;
use crate::nn::{Dataset, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub model: String,
    /// Seconds for the whole training run.
    pub training_seconds: f64,
    /// Mean seconds per inference batch.
    pub inference_seconds: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub repetitions: usize,
    /// Per-repetition inference seconds.
    #[serde(default)]
    pub inference_samples: Vec<f64>,
}

impl TimingEntry {
    /// Coefficient of variation of the inference samples.
    pub fn inference_cv(&self) -> f64 {
        let n = self.inference_samples.len() as f64;
        if n < 2.0 || self.inference_seconds == 0.0 {
            return 0.0;
        }
        let var = self
            .inference_samples
            .iter()
            .map(|v| (v - self.inference_seconds).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        var.sqrt() / self.inference_seconds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub entries: Vec<TimingEntry>,
    pub environment: String,
}

impl TimingReport {
    pub fn new(entries: Vec<TimingEntry>) -> Self {
        Self {
            entries,
            environment: environment_note(),
        }
    }

    pub fn entry(&self, model: &str) -> Option<&TimingEntry> {
        self.entries.iter().find(|e| e.model == model)
    }

    pub fn to_csv(&self) -> String {
        let mut s = "model,training_seconds,inference_seconds,epochs,batch_size,repetitions\n".to_string();
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{:.6},{:.9},{},{},{}",
                e.model, e.training_seconds, e.inference_seconds, e.epochs, e.batch_size, e.repetitions
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<20} {:>18} {:>18}\n", "Model", "Training Time (s)", "Inference Time (s)");
        for e in &self.entries {
            let _ = writeln!(s, "{:<20} {:>18.4} {:>18.6}", e.model, e.training_seconds, e.inference_seconds);
        }
        let _ = writeln!(s, "environment: {}", self.environment);
        s
    }
}

pub fn environment_note() -> String {
    format!(
        "{} {}, {} worker threads, f64",
        std::env::consts::OS,
        std::env::consts::ARCH,
        rayon::current_num_threads()
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    /// Training epochs timed (early stopping disabled).
    pub epochs: usize,
    pub batch_size: usize,
    /// Inference repetitions averaged (at least 100).
    pub repetitions: usize,
    pub fit: FitConfig,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            batch_size: 8,
            repetitions: 100,
            fit: FitConfig::default(),
        }
    }
}

/// Times training of a copy of `recipe` on `data` and single-batch
/// inference. One untimed warm-up pass precedes each measurement.
pub fn measure_times(recipe: &ModelRecipe, data: &Dataset, cfg: &TimingConfig) -> Result<TimingEntry> {
    if cfg.repetitions < 100 {
        return Err(Error::param("timing needs at least 100 inference repetitions"));
    }
    if data.is_empty() || cfg.batch_size == 0 {
        return Err(Error::InsufficientData("timing needs a nonempty dataset and batch".into()));
    }
    let batch_idx: Vec<usize> = (0..cfg.batch_size.min(data.len())).collect();
    let batch = data.subset(&batch_idx);
    let inputs = batch.input_refs();
    recipe.graph.predict(&inputs)?;
    let mut samples = Vec::with_capacity(cfg.repetitions);
    for _ in 0..cfg.repetitions {
        let t = Instant::now();
        std::hint::black_box(recipe.graph.predict(&inputs)?);
        samples.push(t.elapsed().as_secs_f64());
    }
    let inference_seconds = samples.iter().sum::<f64>() / samples.len() as f64;

    let fit = FitConfig {
        train: TrainConfig {
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            patience: cfg.epochs,
            stop_at_train_accuracy: None,
            ..cfg.fit.train.clone()
        },
        ..cfg.fit.clone()
    };
    let mut warm = recipe.clone();
    fit.fit(&mut warm, &batch, None)?;
    let mut net = recipe.clone();
    let t = Instant::now();
    fit.fit(&mut net, data, None)?;
    let training_seconds = t.elapsed().as_secs_f64();
    Ok(TimingEntry {
        model: recipe.kind.name().to_string(),
        training_seconds,
        inference_seconds,
        epochs: cfg.epochs,
        batch_size: batch_idx.len(),
        repetitions: cfg.repetitions,
        inference_samples: samples,
    })
}
