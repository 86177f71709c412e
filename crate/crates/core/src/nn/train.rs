//! Mini-batch training with early stopping.

use serde::{Deserialize, Serialize};

use super::graph::NetworkGraph;
use super::layers::Mode;
use super::loss::LossSpec;
use super::optim::OptimizerState;
use super::tensor::{one_hot, Tensor};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Named input tensors (leading axis = sample) with integer labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: Vec<(String, Tensor)>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(inputs: Vec<(String, Tensor)>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::param("dataset needs at least one input"));
        }
        for (name, t) in &inputs {
            if t.batch() != labels.len() {
                return Err(Error::shape(format!(
                    "input '{name}' has {} samples but there are {} labels",
                    t.batch(),
                    labels.len()
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::param(format!("label {bad} outside {n_classes} classes")));
        }
        Ok(Self {
            inputs,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input(&self, name: &str) -> Option<&Tensor> {
        self.inputs.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn input_refs(&self) -> Vec<(&str, &Tensor)> {
        self.inputs.iter().map(|(n, t)| (n.as_str(), t)).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            inputs: self
                .inputs
                .iter()
                .map(|(n, t)| (n.clone(), t.gather_rows(indices)))
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    pub fn targets(&self) -> Tensor {
        one_hot(&self.labels, self.n_classes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without improvement of the monitored loss before stopping;
    /// 0 stops at the first non-improving epoch.
    pub patience: usize,
    pub seed: u64,
    /// Stop as soon as inference-mode training accuracy reaches this value.
    pub stop_at_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 64,
            patience: 5,
            seed: 0,
            stop_at_train_accuracy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose monitored loss was lowest.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Primary-output probabilities for every sample, in dataset order.
pub fn predict_proba(net: &NetworkGraph, data: &Dataset, batch_size: usize) -> Result<Tensor> {
    let mut rows = Vec::new();
    let mut k = 0;
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(batch_size.max(1)) {
        let part = data.subset(chunk);
        let out = net.predict(&part.input_refs())?;
        let p = out.primary();
        k = p.row_len();
        rows.extend_from_slice(p.data());
    }
    Tensor::new(vec![data.len(), k], rows)
}

/// Inference-mode `(mean loss, accuracy)` over a dataset.
pub fn evaluate(net: &NetworkGraph, data: &Dataset, loss: &LossSpec, batch_size: usize) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyInput("evaluation set is empty".into()));
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    let (mut total, mut correct) = (0.0, 0usize);
    for chunk in idx.chunks(batch_size.max(1)) {
        let part = data.subset(chunk);
        let out = net.predict(&part.input_refs())?;
        let (l, _) = loss.objective(&out, &part.targets())?;
        total += l * chunk.len() as f64;
        correct += out
            .primary()
            .argmax_rows()
            .iter()
            .zip(part.labels())
            .filter(|(a, b)| a == b)
            .count();
    }
    Ok((total / data.len() as f64, correct as f64 / data.len() as f64))
}

/// Trains `net` in place. The monitored quantity for early stopping is the
/// validation loss, or the training loss when no validation set is given.
/// With a validation set the best-validation parameters are restored at the end.
pub fn train(
    net: &mut NetworkGraph,
    train_set: &Dataset,
    val_set: Option<&Dataset>,
    loss: &LossSpec,
    opt: &mut OptimizerState,
    cfg: &TrainConfig,
) -> Result<History> {
    if train_set.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::param("epochs and batch size must be positive"));
    }
    loss.validate()?;
    let val_set = val_set.filter(|v| !v.is_empty());
    let shuffle_root = SplitMix64::new(cfg.seed).fork(0x5348_5546);
    net.reseed(cfg.seed);
    let mut history = History {
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best = f64::INFINITY;
    let mut best_state = None;
    let mut wait = 0;
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        shuffle_root.fork(epoch as u64).shuffle(&mut order);
        net.set_mode(Mode::Train);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train_set.subset(chunk);
            let out = net.forward(&batch.input_refs())?;
            let (_, grads) = loss.objective(&out, &batch.targets())?;
            let refs: Vec<(&str, &Tensor)> = grads.iter().map(|(n, g)| (n.as_str(), g)).collect();
            net.backward(&refs)?;
            opt.step_graph(net)?;
        }
        net.set_mode(Mode::Inference);
        let (train_loss, train_accuracy) = evaluate(net, train_set, loss, cfg.batch_size)?;
        let val = val_set.map(|v| evaluate(net, v, loss, cfg.batch_size)).transpose()?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy,
            val_loss: val.map(|v| v.0),
            val_accuracy: val.map(|v| v.1),
        });
        log::debug!("epoch {epoch}: train loss {train_loss:.5} acc {train_accuracy:.3} val {val:?}");
        let monitored = val.map_or(train_loss, |v| v.0);
        if monitored < best {
            best = monitored;
            history.best_epoch = epoch;
            wait = 0;
            if val.is_some() {
                best_state = Some(net.snapshot());
            }
        } else {
            wait += 1;
            if wait > cfg.patience || cfg.patience == 0 {
                history.stopped_early = epoch < cfg.epochs;
                break;
            }
        }
        if cfg.stop_at_train_accuracy.is_some_and(|t| train_accuracy >= t) {
            history.stopped_early = epoch < cfg.epochs;
            break;
        }
    }
    if let Some(s) = best_state {
        net.restore(&s);
    }
    Ok(history)
}
