//! YOLO label parsing, the 80/10/10 split and stratified k-fold on the
//! bundled fixture.

use std::path::Path;

use hivesense::ingest::{make_kfold, make_split, parse_yolo_labels, DatasetManifest};

fn main() -> hivesense::Result<()> {
    let boxes = parse_yolo_labels("0 0.5 0.5 0.2 0.1\n0 0.25 0.75 0.1 0.1\n")?;
    for b in &boxes {
        let c = b.to_corners(640.0, 480.0);
        println!("{} -> ({:.0}, {:.0})-({:.0}, {:.0}) px", b.to_line(), c.x1, c.y1, c.x2, c.y2);
    }

    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiny");
    let manifest = DatasetManifest::load(&root.join("manifest"))?;
    let plan = make_split(&manifest, 42)?;
    println!(
        "{} samples -> train {}, val {}, test {}",
        manifest.len(),
        plan.train_ids.len(),
        plan.val_ids.len(),
        plan.test_ids.len()
    );
    for (i, fold) in make_kfold(&manifest, 5, 42)?.iter().enumerate() {
        println!("fold {}: test {:?}", i + 1, fold.test_ids);
    }
    Ok(())
}
