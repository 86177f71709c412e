use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: &[&str]) -> Self {
        let n = class_names.len();
        Self {
            class_names: class_names.iter().map(|s| s.to_string()).collect(),
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_counts(class_names: &[&str], counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = class_names.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::shape(format!("confusion matrix must be {n}x{n}")));
        }
        Ok(Self {
            class_names: class_names.iter().map(|s| s.to_string()).collect(),
            counts,
        })
    }

    pub fn from_predictions(class_names: &[&str], truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::shape("truth and prediction lengths differ"));
        }
        let mut cm = Self::new(class_names);
        for (&t, &p) in truth.iter().zip(pred) {
            cm.add(t, p)?;
        }
        Ok(cm)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, truth: usize, pred: usize) -> Result<()> {
        let n = self.n_classes();
        if truth >= n || pred >= n {
            return Err(Error::param(format!("class index out of range for {n} classes")));
        }
        self.counts[truth][pred] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes() != self.n_classes() {
            return Err(Error::shape("confusion matrices differ in size"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Harmonic mean, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Accuracy, per-class precision/recall/F1 (0 on a zero denominator) and
/// support-weighted aggregates.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("confusion matrix has no samples".into()));
    }
    let per_class: Vec<ClassMetrics> = (0..cm.n_classes())
        .map(|c| {
            let tp = cm.counts[c][c];
            let precision = ratio(tp, cm.predicted(c));
            let recall = ratio(tp, cm.support(c));
            ClassMetrics {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: cm.support(c),
            }
        })
        .collect();
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
    };
    Ok(ClassificationMetrics {
        accuracy: ratio(cm.trace(), total),
        weighted_precision: weighted(|m| m.precision),
        weighted_recall: weighted(|m| m.recall),
        weighted_f1: weighted(|m| m.f1),
        per_class,
    })
}

/// How two models' correctness overlaps on the same samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Complementarity {
    pub both_correct: u64,
    pub only_a: u64,
    pub only_b: u64,
    pub neither: u64,
}

impl Complementarity {
    /// Of the samples model A gets wrong, the fraction model B gets right.
    pub fn b_rescues_a(&self) -> f64 {
        ratio(self.only_b, self.only_b + self.neither)
    }

    pub fn a_rescues_b(&self) -> f64 {
        ratio(self.only_a, self.only_a + self.neither)
    }
}

pub fn complementarity(truth: &[usize], pred_a: &[usize], pred_b: &[usize]) -> Result<Complementarity> {
    if truth.len() != pred_a.len() || truth.len() != pred_b.len() {
        return Err(Error::shape("prediction lengths differ"));
    }
    let mut c = Complementarity::default();
    for ((t, a), b) in truth.iter().zip(pred_a).zip(pred_b) {
        match (a == t, b == t) {
            (true, true) => c.both_correct += 1,
            (true, false) => c.only_a += 1,
            (false, true) => c.only_b += 1,
            (false, false) => c.neither += 1,
        }
    }
    Ok(c)
}
