use std::collections::BTreeSet;

use hivesense::ingest::*;
use proptest::prelude::*;

fn manifest(labels: &[usize]) -> DatasetManifest {
    let entries = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| ManifestEntry {
            id: format!("s{i:04}"),
            image: None,
            audio: Some(format!("audio/s{i:04}.wav").into()),
            label,
        })
        .collect();
    DatasetManifest::new(LabelScheme::Health, entries, ".").unwrap()
}

#[test]
fn yolo_example_line() {
    let b = parse_yolo_labels("0 0.5 0.5 0.2 0.1\n").unwrap();
    assert_eq!(b, vec![BBoxAnnotation::new(0, 0.5, 0.5, 0.2, 0.1).unwrap()]);
}

#[test]
fn bundled_clip_count_splits_into_equal_folds() {
    let labels: Vec<usize> = (0..2840).map(|i| i % 2).collect();
    let m = DatasetManifest::new(LabelScheme::BeePresence, manifest(&labels).entries().to_vec(), ".").unwrap();
    for mode in [FoldAssignment::Stratified, FoldAssignment::Random] {
        let folds = make_kfold_with(&m, 5, 3, mode).unwrap();
        assert!(folds.iter().all(|f| f.test_ids.len() == 568));
    }
}

#[test]
fn split_rounding_rule() {
    for n in [10usize, 11, 57, 95, 100, 2840] {
        let p = make_split(&manifest(&vec![0; n]), 1).unwrap();
        let (tr, va, te) = p.sizes();
        assert_eq!((tr, va), (n * 8 / 10, n / 10));
        assert_eq!(tr + va + te, n);
    }
    assert!(matches!(make_split(&manifest(&[0; 9]), 1), Err(hivesense::Error::InsufficientData(_))));
}

proptest! {
    #[test]
    fn yolo_round_trip(rows in prop::collection::vec((0u32..80, 0.0f64..=1.0, 0.0f64..=1.0, 0.001f64..=1.0, 0.001f64..=1.0), 0..12)) {
        let boxes: Vec<BBoxAnnotation> = rows
            .iter()
            .map(|&(c, x, y, w, h)| BBoxAnnotation::new(c, x, y, w, h).unwrap())
            .collect();
        let text: String = boxes.iter().map(|b| b.to_line() + "\n").collect();
        let back = parse_yolo_labels(&text).unwrap();
        prop_assert_eq!(back.len(), boxes.len());
        for (a, b) in back.iter().zip(&boxes) {
            prop_assert_eq!(a.class_id, b.class_id);
            for (u, v) in [(a.cx, b.cx), (a.cy, b.cy), (a.w, b.w), (a.h, b.h)] {
                prop_assert!((u - v).abs() <= 5e-7);
            }
        }
    }

    #[test]
    fn kfold_partitions_every_id(labels in prop::collection::vec(0usize..4, 10..120), k in 2usize..8, seed in any::<u64>(), random in any::<bool>()) {
        prop_assume!(k <= labels.len());
        let m = manifest(&labels);
        let mode = if random { FoldAssignment::Random } else { FoldAssignment::Stratified };
        let folds = make_kfold_with(&m, k, seed, mode).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = BTreeSet::new();
        for f in &folds {
            let test: BTreeSet<&String> = f.test_ids.iter().collect();
            prop_assert!(f.train_ids.iter().all(|id| !test.contains(id)));
            prop_assert_eq!(f.train_ids.len() + f.test_ids.len(), labels.len());
            for id in &f.test_ids {
                prop_assert!(seen.insert(id.clone()), "{} in two test folds", id);
            }
        }
        prop_assert_eq!(seen.len(), labels.len());
        let sizes: Vec<usize> = folds.iter().map(|f| f.test_ids.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn split_is_order_independent(labels in prop::collection::vec(0usize..4, 10..60), seed in any::<u64>()) {
        let m = manifest(&labels);
        let mut rev: Vec<ManifestEntry> = m.entries().to_vec();
        rev.reverse();
        let m2 = DatasetManifest::new(LabelScheme::Health, rev, ".").unwrap();
        prop_assert_eq!(make_split(&m, seed).unwrap(), make_split(&m2, seed).unwrap());
    }

    #[test]
    fn manifest_text_round_trip(labels in prop::collection::vec(0usize..4, 1..30)) {
        let m = manifest(&labels);
        let back = DatasetManifest::parse(&m.to_text(), ".").unwrap();
        prop_assert_eq!(back.entries(), m.entries());
    }
}
