//! mAP@50 and mAP@[.5:.95] of the fixture's predicted bee boxes.

use std::path::Path;

use hivesense::evalx::{coco_thresholds, load_detection_dirs, map_range};

fn main() -> hivesense::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiny");
    let (preds, truths) = load_detection_dirs(&root.join("labels"), &root.join("predictions"))?;
    println!("{} predicted boxes, {} ground-truth boxes", preds.len(), truths.len());
    let s = map_range(&preds, &truths, &coco_thresholds())?;
    for (thr, ap) in &s.per_threshold {
        println!("IoU {thr:.2}  mAP {ap:.4}");
    }
    println!("mAP@50 {:.4}  mAP@[.5:.95] {:.4}", s.map50, s.map_range);
    Ok(())
}
