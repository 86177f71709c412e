//! Attention-based multimodal network.
//!
//! ```text
//! image → backbone → flatten ─┬─ dense16 relu → dense4 softmax  (image_probs)
//!                             │
//! audio → backbone → flatten ─┼─ dense16 relu → dense4 softmax  (audio_probs)
//!                             ▼
//!             concat(2D) → dense k softmax = a
//!             a ⊙ concat → dense32 relu → dropout .5 → dense16 relu → dropout .5
//!             → dense4 softmax                                   (probs)
//! ```
//!
//! In segment mode attention weight `j` scales the `j`-th of `k` equal
//! slices of the concatenated vector; full mode sets `k = 2D`.

use serde::{Deserialize, Serialize};

use super::backbone::BackboneConfig;
use super::recipes::{dense_relu, softmax_head, HEALTH_CLASSES};
use super::{ModelRecipe, RecipeKind, RecipeOptions, AUDIO_INPUT, IMAGE_INPUT};
use crate::error::{Error, Result};
use crate::nn::{GraphBuilder, Init, LayerSpec, AUDIO_HEAD, IMAGE_HEAD, PRIMARY_OUTPUT};

/// Output carrying the per-sample attention weights.
pub const ATTENTION_OUTPUT: &str = "attention";
pub const ATTENTION_NODE: &str = "attention_dense";
pub const CONCAT_NODE: &str = "concat";
pub const GATED_NODE: &str = "gated";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Broadcast {
    #[default]
    Segment,
    Full,
}

/// Which vector each branch contributes to the concatenation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchFeature {
    /// The flattened backbone output (length D).
    #[default]
    Flatten,
    /// The 16-unit dense layer.
    Dense16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmnnConfig {
    pub image_backbone: BackboneConfig,
    pub audio_backbone: BackboneConfig,
    pub attention_width: usize,
    pub broadcast: Broadcast,
    pub branch_feature: BranchFeature,
}

impl Default for AmnnConfig {
    fn default() -> Self {
        Self {
            image_backbone: BackboneConfig::default(),
            audio_backbone: BackboneConfig::default().with_input([1, 128, 128]),
            attention_width: 4,
            broadcast: Broadcast::Segment,
            branch_feature: BranchFeature::Flatten,
        }
    }
}

impl AmnnConfig {
    /// Length of the concatenated branch features.
    pub fn concat_dim(&self) -> usize {
        match self.branch_feature {
            BranchFeature::Flatten => self.image_backbone.feature_dim() + self.audio_backbone.feature_dim(),
            BranchFeature::Dense16 => 32,
        }
    }

    /// Number of attention weights.
    pub fn attention_dim(&self) -> usize {
        match self.broadcast {
            Broadcast::Segment => self.attention_width,
            Broadcast::Full => self.concat_dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.image_backbone.validate()?;
        self.audio_backbone.validate()?;
        let k = self.attention_dim();
        if k == 0 || self.concat_dim() % k != 0 {
            return Err(Error::param(format!(
                "attention width {k} does not divide the {} concatenated features",
                self.concat_dim()
            )));
        }
        Ok(())
    }
}

fn branch(b: &mut GraphBuilder, prefix: &str, input: &str, cfg: &BackboneConfig, feature: BranchFeature, head: &str) -> Result<String> {
    let flat = cfg.append(b, prefix, input)?;
    b.from(&flat);
    dense_relu(b, prefix, 16, None);
    let d16 = b.last().to_string();
    let probs = softmax_head(b, &format!("{prefix}_aux"), HEALTH_CLASSES);
    b.output(head, &probs);
    Ok(match feature {
        BranchFeature::Flatten => flat,
        BranchFeature::Dense16 => d16,
    })
}

/// Width options apply to the backbones; the fusion head keeps its stated
/// widths.
pub fn build_amnn(cfg: &AmnnConfig, opts: &RecipeOptions) -> Result<ModelRecipe> {
    let cfg = AmnnConfig {
        image_backbone: cfg.image_backbone.clone().scaled(opts.width_divisor),
        audio_backbone: cfg.audio_backbone.clone().scaled(opts.width_divisor),
        ..cfg.clone()
    };
    cfg.validate()?;
    let mut b = GraphBuilder::new()
        .input(IMAGE_INPUT, &cfg.image_backbone.input)
        .input(AUDIO_INPUT, &cfg.audio_backbone.input);
    // Fused head output is declared first so it is the primary output.
    b.output(PRIMARY_OUTPUT, "fused_softmax");
    let img = branch(&mut b, "img", IMAGE_INPUT, &cfg.image_backbone, cfg.branch_feature, IMAGE_HEAD)?;
    let aud = branch(&mut b, "aud", AUDIO_INPUT, &cfg.audio_backbone, cfg.branch_feature, AUDIO_HEAD)?;
    b.add(CONCAT_NODE, LayerSpec::Concat, &[&img, &aud]);
    b.add(
        ATTENTION_NODE,
        LayerSpec::Dense { units: cfg.attention_dim(), init: Init::GlorotUniform },
        &[CONCAT_NODE],
    );
    let att = b.add("attention_softmax", LayerSpec::Softmax, &[ATTENTION_NODE]);
    b.output(ATTENTION_OUTPUT, &att);
    b.add(GATED_NODE, LayerSpec::AttentionMultiply, &[&att, CONCAT_NODE]);
    dense_relu(&mut b, "fused", 32, Some(0.5));
    dense_relu(&mut b, "fused", 16, Some(0.5));
    let last = b.last().to_string();
    b.add("fused_dense", LayerSpec::Dense { units: HEALTH_CLASSES, init: Init::GlorotUniform }, &[&last]);
    b.add("fused_softmax", LayerSpec::Softmax, &["fused_dense"]);
    Ok(ModelRecipe {
        kind: RecipeKind::Amnn,
        graph: b.build(opts.seed)?,
    })
}
