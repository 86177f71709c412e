//! IoU, average precision and mAP over IoU thresholds.
//!
//! Matching is greedy: predictions are visited by descending score (ties
//! keep input order) and each claims the unmatched truth of the same image
//! and class with the highest IoU, provided that IoU reaches the threshold.
//! AP is the area under the precision envelope (all-points interpolation).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{parse_yolo_labels, parse_yolo_predictions, BoxCorners};

/// A scored predicted box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    pub bbox: BoxCorners,
    pub score: f64,
    pub class_id: u32,
}

/// A ground-truth box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_id: String,
    pub bbox: BoxCorners,
    pub class_id: u32,
}

fn check_box(b: &BoxCorners) -> Result<()> {
    let ok = [b.x1, b.y1, b.x2, b.y2].iter().all(|v| v.is_finite());
    if !ok || b.x2 <= b.x1 || b.y2 <= b.y1 {
        return Err(Error::Domain(format!("degenerate box {b:?}")));
    }
    Ok(())
}

pub fn iou(a: &BoxCorners, b: &BoxCorners) -> Result<f64> {
    check_box(a)?;
    check_box(b)?;
    let w = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let h = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = w * h;
    Ok(inter / (a.area() + b.area() - inter))
}

/// The IoU thresholds 0.50, 0.55, …, 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// Average precision for one class. Records of other classes are ignored by
/// the caller; here all records are assumed to share a class. With no truths
/// AP is 0.
pub fn average_precision(preds: &[DetectionRecord], truths: &[GroundTruth], iou_thresh: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&iou_thresh) {
        return Err(Error::param(format!("IoU threshold {iou_thresh} outside [0, 1]")));
    }
    for p in preds {
        if !(0.0..=1.0).contains(&p.score) {
            return Err(Error::Domain(format!("score {} outside [0, 1]", p.score)));
        }
        check_box(&p.bbox)?;
    }
    for t in truths {
        check_box(&t.bbox)?;
    }
    if truths.is_empty() || preds.is_empty() {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score));
    let mut used = vec![false; truths.len()];
    let mut tp = Vec::with_capacity(preds.len());
    for &i in &order {
        let p = &preds[i];
        let mut best: Option<(usize, f64)> = None;
        for (j, t) in truths.iter().enumerate() {
            if used[j] || t.image_id != p.image_id || t.class_id != p.class_id {
                continue;
            }
            let v = iou(&p.bbox, &t.bbox)?;
            if v >= iou_thresh && best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            used[j] = true;
        }
        tp.push(best.is_some());
    }
    let n_truth = truths.len() as f64;
    let mut recall = Vec::with_capacity(tp.len());
    let mut precision = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (rank, &hit) in tp.iter().enumerate() {
        hits += hit as usize;
        recall.push(hits as f64 / n_truth);
        precision.push(hits as f64 / (rank + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_r = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev_r) * p;
        prev_r = *r;
    }
    Ok(ap)
}

/// mAP at one threshold: mean AP over the classes that have truths.
pub fn mean_average_precision(preds: &[DetectionRecord], truths: &[GroundTruth], iou_thresh: f64) -> Result<f64> {
    let classes: BTreeSet<u32> = truths.iter().map(|t| t.class_id).collect();
    if classes.is_empty() {
        return average_precision(preds, truths, iou_thresh);
    }
    let mut sum = 0.0;
    for &c in &classes {
        let p: Vec<DetectionRecord> = preds.iter().filter(|r| r.class_id == c).cloned().collect();
        let t: Vec<GroundTruth> = truths.iter().filter(|r| r.class_id == c).cloned().collect();
        sum += average_precision(&p, &t, iou_thresh)?;
    }
    Ok(sum / classes.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    /// `(threshold, mAP)` pairs.
    pub per_threshold: Vec<(f64, f64)>,
    /// mAP at IoU 0.5 (computed even if 0.5 is not in the list).
    pub map50: f64,
    /// Mean over `per_threshold`.
    pub map_range: f64,
}

pub fn map_range(preds: &[DetectionRecord], truths: &[GroundTruth], thresholds: &[f64]) -> Result<MapSummary> {
    if thresholds.is_empty() {
        return Err(Error::param("no IoU thresholds given"));
    }
    let per_threshold = thresholds
        .iter()
        .map(|&t| Ok((t, mean_average_precision(preds, truths, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let map_range = per_threshold.iter().map(|(_, m)| m).sum::<f64>() / per_threshold.len() as f64;
    let map50 = match per_threshold.iter().find(|(t, _)| *t == 0.5) {
        Some(&(_, m)) => m,
        None => mean_average_precision(preds, truths, 0.5)?,
    };
    Ok(MapSummary {
        per_threshold,
        map50,
        map_range,
    })
}

/// Reads YOLO ground truth (`labels_dir/<id>.txt`) and predictions
/// (`preds_dir/<id>.txt`, six fields per line). Boxes are placed in the unit
/// square: IoU is unchanged by scaling either axis, so image sizes are not
/// needed. An image with a label file but no prediction file has no
/// predictions.
pub fn load_detection_dirs(labels_dir: &Path, preds_dir: &Path) -> Result<(Vec<DetectionRecord>, Vec<GroundTruth>)> {
    let mut truths = Vec::new();
    let mut preds = Vec::new();
    let list = |dir: &Path| -> Result<Vec<std::path::PathBuf>> {
        let mut v: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        v.sort();
        Ok(v)
    };
    let stem = |p: &Path| p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let context = |p: &Path, e: Error| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", p.display()),
        },
        Error::Range { line, msg } => Error::Range {
            line,
            msg: format!("{}: {msg}", p.display()),
        },
        other => other,
    };
    for p in list(labels_dir)? {
        let id = stem(&p);
        for b in parse_yolo_labels(&read(&p)?).map_err(|e| context(&p, e))? {
            truths.push(GroundTruth {
                image_id: id.clone(),
                bbox: b.to_corners(1.0, 1.0),
                class_id: b.class_id,
            });
        }
    }
    for p in list(preds_dir)? {
        let id = stem(&p);
        for s in parse_yolo_predictions(&read(&p)?).map_err(|e| context(&p, e))? {
            preds.push(DetectionRecord {
                image_id: id.clone(),
                bbox: s.bbox.to_corners(1.0, 1.0),
                score: s.confidence,
                class_id: s.bbox.class_id,
            });
        }
    }
    Ok((preds, truths))
}
