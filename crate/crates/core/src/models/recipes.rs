use super::backbone::{scale, BackboneConfig};
use super::{ModelRecipe, RecipeKind, RecipeOptions, INPUT};
use crate::error::{Error, Result};
use crate::nn::{GraphBuilder, Init, LayerSpec, PRIMARY_OUTPUT};

pub const HEALTH_CLASSES: usize = 4;
pub const DETECTOR_CLASSES: usize = 2;

/// Name of the first node of the transfer-head recipe's custom layers.
pub const TRANSFER_BACKBONE_PREFIX: &str = "backbone";

pub(crate) fn dense_relu(b: &mut GraphBuilder, prefix: &str, units: usize, dropout: Option<f64>) {
    b.push(prefix, LayerSpec::Dense { units, init: Init::HeUniform });
    b.push(prefix, LayerSpec::Relu);
    if let Some(rate) = dropout {
        b.push(prefix, LayerSpec::Dropout { rate });
    }
}

pub(crate) fn softmax_head(b: &mut GraphBuilder, prefix: &str, classes: usize) -> String {
    b.push(prefix, LayerSpec::Dense { units: classes, init: Init::GlorotUniform });
    b.push(prefix, LayerSpec::Softmax)
}

fn finish(mut b: GraphBuilder, kind: RecipeKind, opts: &RecipeOptions) -> Result<ModelRecipe> {
    let last = b.last().to_string();
    b.output(PRIMARY_OUTPUT, &last);
    Ok(ModelRecipe {
        kind,
        graph: b.build(opts.seed)?,
    })
}

/// 1-D convolutional bee/no-bee classifier over a `[1, input_len]` feature
/// vector. Three blocks of two convolutions (kernel 8) with 64, 128 and 256
/// filters, each block closed by batchnorm, max pooling by 2 and dropout.
pub fn build_audio_detector_1d(input_len: usize, opts: &RecipeOptions) -> Result<ModelRecipe> {
    if input_len < 8 {
        return Err(Error::shape(format!(
            "detector input length {input_len} is too short for three pooling stages"
        )));
    }
    let d = opts.width_divisor;
    let mut b = GraphBuilder::new().input(INPUT, &[1, input_len]);
    for filters in [64, 128, 256] {
        for _ in 0..2 {
            b.push("", LayerSpec::Conv1d { filters: scale(filters, d), kernel: 8 });
            b.push("", LayerSpec::Relu);
        }
        b.push("", LayerSpec::BatchNorm);
        b.push("", LayerSpec::MaxPool1d { pool: 2 });
        b.push("", LayerSpec::Dropout { rate: 0.25 });
    }
    b.push("", LayerSpec::Flatten);
    for units in [32, 64, 128] {
        dense_relu(&mut b, "", scale(units, d), Some(0.25));
    }
    softmax_head(&mut b, "", DETECTOR_CLASSES);
    finish(b, RecipeKind::AudioDetector1d, opts)
}

/// Image health classifier over `[3, S, S]`.
pub fn build_visual_health_cnn(input: [usize; 3], opts: &RecipeOptions) -> Result<ModelRecipe> {
    let [c, h, w] = input;
    if c != 3 {
        return Err(Error::shape(format!("visual model expects 3 channels, got {c}")));
    }
    if h != w || h % 4 != 0 || h == 0 {
        return Err(Error::shape(format!(
            "visual model expects a square input with side divisible by 4, got {h}x{w}"
        )));
    }
    let d = opts.width_divisor;
    let mut b = GraphBuilder::new().input(INPUT, &input);
    for pair in [[64, 128], [256, 1024]] {
        for f in pair {
            b.push("", LayerSpec::Conv2d { filters: scale(f, d), kernel: [3, 3] });
            b.push("", LayerSpec::Relu);
        }
        b.push("", LayerSpec::MaxPool2d { pool: 2 });
        b.push("", LayerSpec::Dropout { rate: 0.25 });
    }
    b.push("", LayerSpec::Flatten);
    softmax_head(&mut b, "", HEALTH_CLASSES);
    finish(b, RecipeKind::VisualCnn, opts)
}

/// Spectrogram health classifier over `[1, S, S]`; four conv blocks of 16,
/// 32, 64 and 128 filters, each pooled by 2.
pub fn build_audio_health_cnn2d(input: [usize; 3], opts: &RecipeOptions) -> Result<ModelRecipe> {
    let [c, h, w] = input;
    if c != 1 {
        return Err(Error::shape(format!("spectrogram model expects 1 channel, got {c}")));
    }
    if h == 0 || w == 0 || h % 16 != 0 || w % 16 != 0 {
        return Err(Error::shape(format!(
            "spectrogram model needs sides divisible by 16 for four poolings, got {h}x{w}"
        )));
    }
    let d = opts.width_divisor;
    let mut b = GraphBuilder::new().input(INPUT, &input);
    for f in [16, 32, 64, 128] {
        b.push("", LayerSpec::Conv2d { filters: scale(f, d), kernel: [3, 3] });
        b.push("", LayerSpec::Relu);
        b.push("", LayerSpec::MaxPool2d { pool: 2 });
        b.push("", LayerSpec::Dropout { rate: 0.25 });
    }
    b.push("", LayerSpec::Flatten);
    dense_relu(&mut b, "", scale(32, d), Some(0.25));
    dense_relu(&mut b, "", scale(16, d), Some(0.25));
    softmax_head(&mut b, "", HEALTH_CLASSES);
    finish(b, RecipeKind::AudioCnn2d, opts)
}

/// Sequence health classifier over `[seq_len, feat_dim]`. The LSTM's final
/// hidden state feeds the dense head.
pub fn build_audio_health_lstm(seq_len: usize, feat_dim: usize, opts: &RecipeOptions) -> Result<ModelRecipe> {
    if feat_dim == 0 {
        return Err(Error::param("feature dimension must be positive"));
    }
    if seq_len == 0 {
        return Err(Error::param("sequence length must be positive"));
    }
    let d = opts.width_divisor;
    let mut b = GraphBuilder::new().input(INPUT, &[seq_len, feat_dim]);
    b.push("", LayerSpec::Lstm { units: scale(128, d) });
    dense_relu(&mut b, "", scale(64, d), Some(0.4));
    dense_relu(&mut b, "", scale(32, d), Some(0.4));
    softmax_head(&mut b, "", HEALTH_CLASSES);
    finish(b, RecipeKind::AudioLstm, opts)
}

/// Trainable stand-in backbone plus the custom classification head
/// (dense 256 relu, dropout 0.2, dense 4 softmax). Backbone nodes are named
/// with the [`TRANSFER_BACKBONE_PREFIX`] prefix.
pub fn build_transfer_head(backbone: &BackboneConfig, opts: &RecipeOptions) -> Result<ModelRecipe> {
    let mut b = GraphBuilder::new().input(INPUT, &backbone.input);
    backbone.append(&mut b, TRANSFER_BACKBONE_PREFIX, INPUT)?;
    dense_relu(&mut b, "head", scale(256, opts.width_divisor), Some(0.2));
    softmax_head(&mut b, "head", HEALTH_CLASSES);
    finish(b, RecipeKind::TransferHead, opts)
}
