//! Architecture recipes built on the [`nn`](crate::nn) engine.

pub mod amnn;
pub mod backbone;
pub mod recipes;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use amnn::{build_amnn, AmnnConfig, Broadcast, BranchFeature, ATTENTION_NODE, ATTENTION_OUTPUT, CONCAT_NODE, GATED_NODE};
pub use backbone::BackboneConfig;
pub use recipes::{
    build_audio_detector_1d, build_audio_health_cnn2d, build_audio_health_lstm, build_transfer_head,
    build_visual_health_cnn, DETECTOR_CLASSES, HEALTH_CLASSES, TRANSFER_BACKBONE_PREFIX,
};

use crate::dsp::FeatureKind;
use crate::error::{Error, Result};
use crate::nn::{NetworkGraph, PRIMARY_OUTPUT};

/// Input name of single-modality recipes.
pub const INPUT: &str = "x";
pub const IMAGE_INPUT: &str = "image";
pub const AUDIO_INPUT: &str = "audio";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RecipeKind {
    #[serde(rename = "audio-detector-1d")]
    AudioDetector1d,
    #[serde(rename = "visual-cnn")]
    VisualCnn,
    #[serde(rename = "audio-cnn2d")]
    AudioCnn2d,
    #[serde(rename = "audio-lstm")]
    AudioLstm,
    #[serde(rename = "transfer-head")]
    TransferHead,
    #[serde(rename = "amnn")]
    Amnn,
}

impl RecipeKind {
    pub const ALL: [RecipeKind; 6] = [
        RecipeKind::AudioDetector1d,
        RecipeKind::VisualCnn,
        RecipeKind::AudioCnn2d,
        RecipeKind::AudioLstm,
        RecipeKind::TransferHead,
        RecipeKind::Amnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RecipeKind::AudioDetector1d => "audio-detector-1d",
            RecipeKind::VisualCnn => "visual-cnn",
            RecipeKind::AudioCnn2d => "audio-cnn2d",
            RecipeKind::AudioLstm => "audio-lstm",
            RecipeKind::TransferHead => "transfer-head",
            RecipeKind::Amnn => "amnn",
        }
    }

    pub fn uses_image(self) -> bool {
        matches!(self, RecipeKind::VisualCnn | RecipeKind::TransferHead | RecipeKind::Amnn)
    }

    pub fn uses_audio(self) -> bool {
        !matches!(self, RecipeKind::VisualCnn | RecipeKind::TransferHead)
    }

    pub fn n_classes(self) -> usize {
        match self {
            RecipeKind::AudioDetector1d => DETECTOR_CLASSES,
            _ => HEALTH_CLASSES,
        }
    }
}

impl fmt::Display for RecipeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecipeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RecipeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown recipe '{s}'")))
    }
}

/// Options shared by all builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeOptions {
    /// Layer widths are divided by this (each at least 1). 1 gives the
    /// stated architecture.
    pub width_divisor: usize,
    pub seed: u64,
}

impl Default for RecipeOptions {
    fn default() -> Self {
        Self { width_divisor: 1, seed: 0 }
    }
}

/// A built architecture.
#[derive(Debug, Clone)]
pub struct ModelRecipe {
    pub kind: RecipeKind,
    pub graph: NetworkGraph,
}

impl ModelRecipe {
    pub fn n_classes(&self) -> usize {
        self.graph.output_shape(PRIMARY_OUTPUT).map_or(0, |s| s[0])
    }
}

/// Everything needed to build a recipe and feed it from raw data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecipeConfig {
    pub kind: RecipeKind,
    pub width_divisor: usize,
    pub seed: u64,
    /// Side of square image inputs.
    pub image_size: usize,
    /// Side of square spectrogram inputs.
    pub spectrogram_size: usize,
    /// Audio representation for 1-D, sequence and 2-D audio inputs.
    pub feature: FeatureKind,
    /// Time steps of sequence inputs.
    pub seq_len: usize,
    pub backbone_filters: Vec<usize>,
    pub freeze_backbone: bool,
    pub attention_width: usize,
    pub broadcast: Broadcast,
    pub branch_feature: BranchFeature,
}

impl Default for RecipeConfig {
    fn default() -> Self {
        Self {
            kind: RecipeKind::AudioCnn2d,
            width_divisor: 1,
            seed: 0,
            image_size: 128,
            spectrogram_size: 128,
            feature: FeatureKind::Mel,
            seq_len: 32,
            backbone_filters: BackboneConfig::default().filters,
            freeze_backbone: false,
            attention_width: 4,
            broadcast: Broadcast::Segment,
            branch_feature: BranchFeature::Flatten,
        }
    }
}

impl RecipeConfig {
    pub fn new(kind: RecipeKind) -> Self {
        Self { kind, ..Self::default() }
    }

    pub fn options(&self) -> RecipeOptions {
        RecipeOptions {
            width_divisor: self.width_divisor,
            seed: self.seed,
        }
    }

    fn backbone(&self, channels: usize, side: usize) -> BackboneConfig {
        BackboneConfig {
            input: [channels, side, side],
            filters: self.backbone_filters.clone(),
            ..BackboneConfig::default()
        }
    }

    /// Rows of the configured feature for the default spectral settings.
    pub fn feature_rows(&self) -> usize {
        crate::dsp::feature_rows(self.feature, &crate::dsp::SpectralConfig::default())
    }

    pub fn amnn_config(&self) -> AmnnConfig {
        AmnnConfig {
            image_backbone: self.backbone(3, self.image_size),
            audio_backbone: self.backbone(1, self.spectrogram_size),
            attention_width: self.attention_width,
            broadcast: self.broadcast,
            branch_feature: self.branch_feature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_divisor == 0 {
            return Err(Error::param("width_divisor must be at least 1"));
        }
        if self.seq_len == 0 || self.image_size == 0 || self.spectrogram_size == 0 {
            return Err(Error::param("input sizes must be positive"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ModelRecipe> {
        self.validate()?;
        let opts = self.options();
        let mut recipe = match self.kind {
            RecipeKind::AudioDetector1d => build_audio_detector_1d(self.feature_rows(), &opts),
            RecipeKind::VisualCnn => build_visual_health_cnn([3, self.image_size, self.image_size], &opts),
            RecipeKind::AudioCnn2d => {
                build_audio_health_cnn2d([1, self.spectrogram_size, self.spectrogram_size], &opts)
            }
            RecipeKind::AudioLstm => build_audio_health_lstm(self.seq_len, self.feature_rows(), &opts),
            RecipeKind::TransferHead => {
                let bb = self.backbone(3, self.image_size).scaled(self.width_divisor);
                build_transfer_head(&bb, &opts)
            }
            RecipeKind::Amnn => build_amnn(&self.amnn_config(), &opts),
        }?;
        if self.freeze_backbone && self.kind == RecipeKind::TransferHead {
            recipe.graph.freeze_prefix(TRANSFER_BACKBONE_PREFIX);
        }
        Ok(recipe)
    }
}
