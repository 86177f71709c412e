//! Trains the visual health CNN on the bundled fixture with an 80/10/10
//! split and prints the test report.

use std::path::Path;

use hivesense::dsp::FeatureExtractor;
use hivesense::evalx::{confusion_on, EvalReport, FitConfig};
use hivesense::ingest::{make_split, DatasetManifest};
use hivesense::models::{RecipeConfig, RecipeKind};
use hivesense::pipeline::load_dataset;

fn main() -> hivesense::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiny");
    let manifest = DatasetManifest::load(&root.join("manifest"))?;
    let recipe = RecipeConfig {
        image_size: 16,
        width_divisor: 8,
        seed: 3,
        ..RecipeConfig::new(RecipeKind::VisualCnn)
    };
    let data = load_dataset(&manifest, &recipe, &FeatureExtractor::default())?;
    let plan = make_split(&manifest, 3)?;
    let (train, val, test) = (data.select(&plan.train_ids)?, data.select(&plan.val_ids)?, data.select(&plan.test_ids)?);

    let mut model = recipe.build()?;
    let mut fit = FitConfig::default();
    fit.learning_rate = 3e-3;
    fit.train.epochs = 40;
    fit.train.batch_size = 8;
    fit.train.patience = 10;
    let history = fit.fit(&mut model, &train, Some(&val))?;
    for e in &history.epochs {
        println!(
            "epoch {:>2}  train loss {:.4} acc {:.2}  val loss {:.4}",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            e.val_loss.unwrap_or(f64::NAN)
        );
    }
    let names = manifest.scheme().class_names();
    let report = EvalReport::from_confusion("visual-cnn", confusion_on(&model, &test, names, 16)?)?;
    print!("{}", report.to_text());
    Ok(())
}
