//! Evaluation reports.
//!
//! CSV columns: `model,fold,n_test,accuracy,precision,recall,f1`, then one
//! `f1_<class>` column per class. `fold` is a 1-based fold number, `test`
//! for a single held-out evaluation, `pooled` for the summed confusion
//! matrix over all folds, and `mean` / `std` for the fold summary rows.
//! Rates are written with six decimals.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classification::{classification_metrics, ClassificationMetrics, ConfusionMatrix};
use super::timing::TimingEntry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: ClassificationMetrics,
    pub epochs_run: usize,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub per_class_f1: Vec<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub confusion: ConfusionMatrix,
    pub metrics: ClassificationMetrics,
    pub folds: Vec<FoldResult>,
    pub summary: Option<FoldSummary>,
    pub timing: Option<TimingEntry>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn from_confusion(model: &str, confusion: ConfusionMatrix) -> Result<Self> {
        Ok(Self {
            model: model.to_string(),
            metrics: classification_metrics(&confusion)?,
            confusion,
            folds: Vec::new(),
            summary: None,
            timing: None,
            warnings: Vec::new(),
        })
    }

    /// Pools the fold confusion matrices and summarizes fold metrics.
    pub fn from_folds(model: &str, folds: Vec<FoldResult>) -> Result<Self> {
        let first = folds.first().ok_or_else(|| Error::EmptyInput("no folds".into()))?;
        let mut pooled = ConfusionMatrix {
            class_names: first.confusion.class_names.clone(),
            counts: vec![vec![0; first.confusion.n_classes()]; first.confusion.n_classes()],
        };
        for f in &folds {
            pooled.merge(&f.confusion)?;
        }
        let col = |g: fn(&ClassificationMetrics) -> f64| MeanStd::of(&folds.iter().map(|f| g(&f.metrics)).collect::<Vec<_>>());
        let per_class_f1 = (0..pooled.n_classes())
            .map(|c| MeanStd::of(&folds.iter().map(|f| f.metrics.per_class[c].f1).collect::<Vec<_>>()))
            .collect();
        let summary = FoldSummary {
            accuracy: col(|m| m.accuracy),
            precision: col(|m| m.weighted_precision),
            recall: col(|m| m.weighted_recall),
            f1: col(|m| m.weighted_f1),
            per_class_f1,
        };
        let mut report = Self::from_confusion(model, pooled)?;
        report.folds = folds;
        report.summary = Some(summary);
        Ok(report)
    }

    fn csv_header(&self) -> String {
        let mut h = "model,fold,n_test,accuracy,precision,recall,f1".to_string();
        for c in &self.confusion.class_names {
            let _ = write!(h, ",f1_{c}");
        }
        h
    }

    fn csv_row(&self, fold: &str, n: u64, m: &ClassificationMetrics) -> String {
        let mut r = format!(
            "{},{fold},{n},{:.6},{:.6},{:.6},{:.6}",
            self.model, m.accuracy, m.weighted_precision, m.weighted_recall, m.weighted_f1
        );
        for c in &m.per_class {
            let _ = write!(r, ",{:.6}", c.f1);
        }
        r
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        if self.folds.is_empty() {
            out += &self.csv_row("test", self.confusion.total(), &self.metrics);
            out.push('\n');
            return out;
        }
        for f in &self.folds {
            out += &self.csv_row(&(f.fold + 1).to_string(), f.confusion.total(), &f.metrics);
            out.push('\n');
        }
        out += &self.csv_row("pooled", self.confusion.total(), &self.metrics);
        out.push('\n');
        if let Some(s) = &self.summary {
            for (name, pick) in [("mean", true), ("std", false)] {
                let v = |m: &MeanStd| if pick { m.mean } else { m.std };
                let _ = write!(
                    out,
                    "{},{name},,{:.6},{:.6},{:.6},{:.6}",
                    self.model,
                    v(&s.accuracy),
                    v(&s.precision),
                    v(&s.recall),
                    v(&s.f1)
                );
                for c in &s.per_class_f1 {
                    let _ = write!(out, ",{:.6}", v(c));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Plain-text tables: overall metrics, per-class F1, confusion matrix,
    /// optional fold and timing sections.
    pub fn to_text(&self) -> String {
        let pct = |v: f64| format!("{:.2}%", 100.0 * v);
        let mut s = String::new();
        let _ = writeln!(s, "Model: {}", self.model);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<20} {:>10} {:>10} {:>10} {:>10}", "Model", "Accuracy", "Precision", "Recall", "F1-score");
        let m = &self.metrics;
        let _ = writeln!(
            s,
            "{:<20} {:>10} {:>10} {:>10} {:>10}",
            self.model,
            pct(m.accuracy),
            pct(m.weighted_precision),
            pct(m.weighted_recall),
            pct(m.weighted_f1)
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<20} {:>10} {:>10} {:>10} {:>8}", "Class", "Precision", "Recall", "F1-score", "Support");
        for (name, c) in self.confusion.class_names.iter().zip(&m.per_class) {
            let _ = writeln!(
                s,
                "{:<20} {:>10} {:>10} {:>10} {:>8}",
                name,
                pct(c.precision),
                pct(c.recall),
                pct(c.f1),
                c.support
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Confusion matrix (rows = truth, columns = prediction)");
        let _ = write!(s, "{:<20}", "");
        for name in &self.confusion.class_names {
            let _ = write!(s, " {:>10}", truncate(name, 10));
        }
        let _ = writeln!(s);
        for (name, row) in self.confusion.class_names.iter().zip(&self.confusion.counts) {
            let _ = write!(s, "{:<20}", name);
            for v in row {
                let _ = write!(s, " {v:>10}");
            }
            let _ = writeln!(s);
        }
        if let Some(sum) = &self.summary {
            let _ = writeln!(s);
            let _ = writeln!(s, "{}-fold cross-validation", self.folds.len());
            let _ = writeln!(s, "{:<8} {:>10} {:>10} {:>10} {:>10}", "Fold", "Accuracy", "Precision", "Recall", "F1-score");
            for f in &self.folds {
                let fm = &f.metrics;
                let _ = writeln!(
                    s,
                    "{:<8} {:>10} {:>10} {:>10} {:>10}",
                    f.fold + 1,
                    pct(fm.accuracy),
                    pct(fm.weighted_precision),
                    pct(fm.weighted_recall),
                    pct(fm.weighted_f1)
                );
            }
            let ms = |v: &MeanStd| format!("{:.2}±{:.2}", 100.0 * v.mean, 100.0 * v.std);
            let _ = writeln!(
                s,
                "{:<8} {:>10} {:>10} {:>10} {:>10}",
                "mean",
                ms(&sum.accuracy),
                ms(&sum.precision),
                ms(&sum.recall),
                ms(&sum.f1)
            );
        }
        if let Some(t) = &self.timing {
            let _ = writeln!(s);
            let _ = writeln!(s, "{:<20} {:>18} {:>18}", "Model", "Training Time (s)", "Inference Time (s)");
            let _ = writeln!(s, "{:<20} {:>18.4} {:>18.6}", t.model, t.training_seconds, t.inference_seconds);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    /// Writes `<stem>.csv`, `<stem>.txt` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let put = |ext: &str, body: String| {
            let p = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put("csv", self.to_csv())?;
        put("txt", self.to_text())?;
        put("json", serde_json::to_string_pretty(self).expect("report serializes"))
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fold(i: usize, counts: Vec<Vec<u64>>) -> FoldResult {
        let cm = ConfusionMatrix::from_counts(&["a", "b"], counts).unwrap();
        FoldResult {
            fold: i,
            n_train: 10,
            metrics: classification_metrics(&cm).unwrap(),
            confusion: cm,
            epochs_run: 1,
        }
    }

    #[test]
    fn identical_folds_have_zero_std() {
        let r = EvalReport::from_folds("m", (0..3).map(|i| fold(i, vec![vec![3, 1], vec![0, 4]])).collect()).unwrap();
        let s = r.summary.as_ref().unwrap();
        assert_eq!(s.accuracy.mean, r.folds[0].metrics.accuracy);
        assert_eq!(s.accuracy.std, 0.0);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "model,fold,n_test,accuracy,precision,recall,f1,f1_a,f1_b");
        assert_eq!(lines.len(), 1 + 3 + 1 + 2);
        assert!(lines[5].starts_with("m,mean,,0.875000"));
        assert!(r.to_text().contains("3-fold cross-validation"));
    }
}
