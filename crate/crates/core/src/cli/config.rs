//! Experiment configuration file.
//!
//! TOML with these keys (all optional; command-line flags win):
//!
//! ```toml
//! dataset = "fixtures/tiny"      # directory holding `manifest`, images/, audio/, labels/
//! manifest = "manifest"          # relative to `dataset` unless absolute
//! output = "runs/exp1"
//! seed = 42                      # required by train and crossval
//! features = ["mel", "mfcc"]     # extract
//! k = 5                          # crossval
//! random_folds = false           # crossval: plain shuffled folds instead of stratified
//!
//! [recipe]                       # see RecipeConfig
//! kind = "amnn"
//! width_divisor = 1
//! image_size = 128
//! spectrogram_size = 128
//! feature = "mel"
//!
//! [fit]                          # see FitConfig
//! learning_rate = 1e-4
//! lambda_image = 0.5
//! lambda_sound = 0.5
//! optimizer = { kind = "adam", beta1 = 0.9, beta2 = 0.999, eps = 1e-8 }
//! [fit.train]
//! epochs = 20
//! batch_size = 64
//! patience = 5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsp::FeatureKind;
use crate::error::{Error, Result};
use crate::evalx::FitConfig;
use crate::models::RecipeConfig;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "HIVESENSE_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub features: Vec<FeatureKind>,
    pub k: usize,
    pub random_folds: bool,
    pub recipe: RecipeConfig,
    pub fit: FitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            manifest: None,
            output: None,
            seed: None,
            features: FeatureKind::ALL.to_vec(),
            k: 5,
            random_folds: false,
            recipe: RecipeConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_else(|e| format!("# config not representable as TOML: {e}\n"))
    }

    /// The manifest file: explicit path, else `<dataset>/manifest`.
    pub fn manifest_path(&self) -> Result<PathBuf> {
        match (&self.manifest, &self.dataset) {
            (Some(m), Some(d)) if m.is_relative() => Ok(d.join(m)),
            (Some(m), _) => Ok(m.clone()),
            (None, Some(d)) => Ok(d.join("manifest")),
            (None, None) => Err(Error::Validation("no dataset or manifest given".into())),
        }
    }

    /// Output directory: explicit, else `$HIVESENSE_OUT/<command>`, else
    /// `hivesense-out/<command>`.
    pub fn output_dir(&self, command: &str) -> PathBuf {
        if let Some(o) = &self.output {
            return o.clone();
        }
        let root = std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("hivesense-out"));
        root.join(command)
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Validation("a seed is required (--seed or `seed` in the config)".into()))
    }
}
