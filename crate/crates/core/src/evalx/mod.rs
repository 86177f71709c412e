//! Detection and classification metrics, cross-validation and timing.

pub mod classification;
pub mod crossval;
pub mod detection;
pub mod report;
pub mod timing;

pub use classification::{
    classification_metrics, complementarity, f1_score, ClassMetrics, ClassificationMetrics, Complementarity,
    ConfusionMatrix,
};
pub use crossval::{
    confusion_on, cross_validate, fold_seed, predict_labels, run_cross_validation, CrossValConfig, FitConfig,
};
pub use detection::{
    average_precision, coco_thresholds, iou, load_detection_dirs, map_range, mean_average_precision, DetectionRecord,
    GroundTruth, MapSummary,
};
pub use report::{EvalReport, FoldResult, FoldSummary, MeanStd};
pub use timing::{environment_note, measure_times, TimingConfig, TimingEntry, TimingReport};
