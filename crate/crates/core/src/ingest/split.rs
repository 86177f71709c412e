//! Deterministic train/val/test splits and k-fold partitions.
//!
//! Ids are sorted before shuffling, so results depend only on the id set,
//! labels and seed, never on manifest order. Shuffles are Fisher–Yates
//! driven by [`SplitMix64`](crate::rng::SplitMix64).
//!
//! Split sizes: train `⌊0.8n⌋`, val `⌊0.1n⌋`, test the remainder.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const SPLIT_STREAM: u64 = 0x5350_4c49_54;
const FOLD_STREAM: u64 = 0x464f_4c44;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
}

impl SplitPlan {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train_ids.len(), self.val_ids.len(), self.test_ids.len())
    }
}

/// How k-fold assigns ids to folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldAssignment {
    /// Shuffle within each class, then deal classes in label order round-robin.
    #[default]
    Stratified,
    /// Shuffle all ids and deal round-robin.
    Random,
}

fn sorted_ids(m: &DatasetManifest) -> Vec<String> {
    let mut ids: Vec<String> = m.entries().iter().map(|e| e.id.clone()).collect();
    ids.sort();
    ids
}

pub fn make_split(manifest: &DatasetManifest, seed: u64) -> Result<SplitPlan> {
    let n = manifest.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("split needs at least 10 entries, got {n}")));
    }
    let mut ids = sorted_ids(manifest);
    SplitMix64::new(seed).fork(SPLIT_STREAM).shuffle(&mut ids);
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    let test_ids = ids.split_off(n_train + n_val);
    let val_ids = ids.split_off(n_train);
    Ok(SplitPlan {
        train_ids: ids,
        val_ids,
        test_ids,
        seed,
    })
}

pub fn make_kfold(manifest: &DatasetManifest, k: usize, seed: u64) -> Result<Vec<SplitPlan>> {
    make_kfold_with(manifest, k, seed, FoldAssignment::Stratified)
}

/// Fold `i` holds out the ids dealt to position `i`. Fold sizes differ by at
/// most one in both modes.
pub fn make_kfold_with(manifest: &DatasetManifest, k: usize, seed: u64, mode: FoldAssignment) -> Result<Vec<SplitPlan>> {
    if k < 2 {
        return Err(Error::param(format!("k-fold needs k >= 2, got {k}")));
    }
    let n = manifest.len();
    if k > n {
        return Err(Error::InsufficientData(format!("{k} folds over {n} entries")));
    }
    let root = SplitMix64::new(seed).fork(FOLD_STREAM);
    let order: Vec<String> = match mode {
        FoldAssignment::Random => {
            let mut ids = sorted_ids(manifest);
            root.clone().shuffle(&mut ids);
            ids
        }
        FoldAssignment::Stratified => {
            let mut by_label: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for e in manifest.entries() {
                by_label.entry(e.label).or_default().push(e.id.clone());
            }
            let mut out = Vec::with_capacity(n);
            for (label, mut ids) in by_label {
                ids.sort();
                root.fork(label as u64).shuffle(&mut ids);
                out.extend(ids);
            }
            out
        }
    };
    let mut folds = vec![Vec::new(); k];
    for (i, id) in order.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok((0..k)
        .map(|f| {
            let train_ids = folds
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != f)
                .flat_map(|(_, v)| v.iter().cloned())
                .collect();
            SplitPlan {
                train_ids,
                val_ids: Vec::new(),
                test_ids: folds[f].clone(),
                seed,
            }
        })
        .collect())
}
