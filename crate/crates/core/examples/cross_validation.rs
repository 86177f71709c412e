//! Five-fold cross-validation of the bee-presence 1-D CNN on chroma
//! vectors from the fixture clips.

use std::path::Path;

use hivesense::dsp::FeatureKind;
use hivesense::evalx::{run_cross_validation, CrossValConfig};
use hivesense::ingest::DatasetManifest;
use hivesense::models::{RecipeConfig, RecipeKind};

fn main() -> hivesense::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiny");
    let manifest = DatasetManifest::load(&root.join("manifest_bee"))?;
    let recipe = RecipeConfig {
        feature: FeatureKind::Chroma,
        ..RecipeConfig::new(RecipeKind::AudioDetector1d)
    };
    let mut cv = CrossValConfig { seed: 7, ..CrossValConfig::default() };
    cv.fit.learning_rate = 1e-3;
    cv.fit.train.epochs = 30;
    cv.fit.train.batch_size = 8;
    let report = run_cross_validation(&recipe, &manifest, &cv)?;
    print!("{}", report.to_csv());
    Ok(())
}
