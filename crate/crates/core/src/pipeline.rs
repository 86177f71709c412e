//! Turning manifest entries into model inputs for a recipe.
//!
//! | recipe             | input                                            |
//! |--------------------|--------------------------------------------------|
//! | audio-detector-1d  | condensed feature vector, `[1, rows]`            |
//! | audio-lstm         | unit dB feature grid, `[seq_len, rows]`          |
//! | audio-cnn2d        | unit dB feature grid resized, `[1, S, S]`        |
//! | visual-cnn         | RGB image resized, `[3, S, S]`                   |
//! | transfer-head      | RGB image resized, `[3, S, S]`                   |
//! | amnn               | image `[3, S, S]` and spectrogram `[1, S, S]`    |

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;

use crate::dsp::FeatureExtractor;
use crate::error::{Error, Result};
use crate::ingest::{load_model_image, load_wav, AudioClip, DatasetManifest, ImageSample, ManifestEntry};
use crate::models::{RecipeConfig, RecipeKind, AUDIO_INPUT, IMAGE_INPUT, INPUT};
use crate::nn::{Dataset, Tensor};

/// Per-sample input shapes of the recipe, keyed by input name.
pub fn input_shapes(cfg: &RecipeConfig) -> Vec<(&'static str, Vec<usize>)> {
    let rows = cfg.feature_rows();
    let (i, s) = (cfg.image_size, cfg.spectrogram_size);
    match cfg.kind {
        RecipeKind::AudioDetector1d => vec![(INPUT, vec![1, rows])],
        RecipeKind::AudioLstm => vec![(INPUT, vec![cfg.seq_len, rows])],
        RecipeKind::AudioCnn2d => vec![(INPUT, vec![1, s, s])],
        RecipeKind::VisualCnn | RecipeKind::TransferHead => vec![(INPUT, vec![3, i, i])],
        RecipeKind::Amnn => vec![(IMAGE_INPUT, vec![3, i, i]), (AUDIO_INPUT, vec![1, s, s])],
    }
}

/// Flat audio input for one clip.
pub fn audio_input(clip: &AudioClip, cfg: &RecipeConfig, fx: &FeatureExtractor) -> Result<Vec<f64>> {
    match cfg.kind {
        RecipeKind::AudioDetector1d => Ok(fx.vector(clip, cfg.feature)?.values),
        RecipeKind::AudioLstm => Ok(fx.matrix(clip, cfg.feature)?.to_sequence(cfg.seq_len)),
        RecipeKind::AudioCnn2d | RecipeKind::Amnn => {
            let s = cfg.spectrogram_size;
            Ok(fx.matrix(clip, cfg.feature)?.to_image(s, s))
        }
        RecipeKind::VisualCnn | RecipeKind::TransferHead => {
            Err(Error::Validation(format!("recipe {} takes no audio", cfg.kind)))
        }
    }
}

/// Flat channels-first image input.
pub fn image_input(img: &ImageSample, cfg: &RecipeConfig) -> Result<Vec<f64>> {
    if !cfg.kind.uses_image() {
        return Err(Error::Validation(format!("recipe {} takes no images", cfg.kind)));
    }
    let s = cfg.image_size;
    if img.height() == s && img.width() == s {
        Ok(img.to_chw())
    } else {
        Ok(img.resize(s, s)?.to_chw())
    }
}

/// Checks that every entry carries the modalities the recipe needs and that
/// the label scheme has the recipe's class count.
pub fn check_compatible(manifest: &DatasetManifest, cfg: &RecipeConfig) -> Result<()> {
    let n = manifest.scheme().n_classes();
    if n != cfg.kind.n_classes() {
        return Err(Error::Validation(format!(
            "recipe {} predicts {} classes but the manifest's {} labels have {n}",
            cfg.kind,
            cfg.kind.n_classes(),
            manifest.scheme().name()
        )));
    }
    for e in manifest.entries() {
        if cfg.kind.uses_image() && e.image.is_none() {
            return Err(Error::Validation(format!("entry '{}' has no image for recipe {}", e.id, cfg.kind)));
        }
        if cfg.kind.uses_audio() && e.audio.is_none() {
            return Err(Error::Validation(format!("entry '{}' has no audio for recipe {}", e.id, cfg.kind)));
        }
    }
    Ok(())
}

fn entry_inputs(m: &DatasetManifest, e: &ManifestEntry, cfg: &RecipeConfig, fx: &FeatureExtractor) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    if cfg.kind.uses_image() {
        let p = m.resolve(e.image.as_deref().expect("checked"));
        out.push(image_input(&load_model_image(&p, cfg.image_size)?, cfg)?);
    }
    if cfg.kind.uses_audio() {
        let p = m.resolve(e.audio.as_deref().expect("checked"));
        out.push(audio_input(&load_wav(&p)?, cfg, fx)?);
    }
    Ok(out)
}

/// Inputs for a whole manifest, in manifest order.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl LoadedData {
    /// The samples with the given ids, in that order.
    pub fn select(&self, ids: &[String]) -> Result<Dataset> {
        let idx = ids
            .iter()
            .map(|id| {
                self.index
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Validation(format!("unknown sample id '{id}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.dataset.subset(&idx))
    }
}

/// Decodes and featurizes every entry (in parallel; order is preserved).
pub fn load_dataset(manifest: &DatasetManifest, cfg: &RecipeConfig, fx: &FeatureExtractor) -> Result<LoadedData> {
    check_compatible(manifest, cfg)?;
    if manifest.is_empty() {
        return Err(Error::EmptyInput("manifest has no entries".into()));
    }
    let per_entry: Vec<Vec<Vec<f64>>> = manifest
        .entries()
        .par_iter()
        .map(|e| entry_inputs(manifest, e, cfg, fx).map_err(|err| Error::Validation(format!("entry '{}': {err}", e.id))))
        .collect::<Result<_>>()?;
    let n = per_entry.len();
    let inputs = input_shapes(cfg)
        .into_iter()
        .enumerate()
        .map(|(slot, (name, shape))| {
            let mut data = Vec::with_capacity(n * shape.iter().product::<usize>());
            for sample in &per_entry {
                data.extend_from_slice(&sample[slot]);
            }
            let mut full = vec![n];
            full.extend(shape);
            Ok((name.to_string(), Tensor::new(full, data)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = manifest.entries().iter().map(|e| e.label).collect();
    let ids: Vec<String> = manifest.entries().iter().map(|e| e.id.clone()).collect();
    let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    Ok(LoadedData {
        dataset: Dataset::new(inputs, labels, cfg.kind.n_classes())?,
        ids,
        index,
    })
}

/// Inputs for a single sample given by file paths.
pub fn sample_tensors(
    image: Option<&Path>,
    audio: Option<&Path>,
    cfg: &RecipeConfig,
    fx: &FeatureExtractor,
) -> Result<Vec<(String, Tensor)>> {
    let mut out = Vec::new();
    for (name, shape) in input_shapes(cfg) {
        let data = if name == AUDIO_INPUT || (name == INPUT && cfg.kind.uses_audio()) {
            let p = audio.ok_or_else(|| Error::Validation(format!("recipe {} needs an audio file", cfg.kind)))?;
            audio_input(&load_wav(p)?, cfg, fx)?
        } else {
            let p = image.ok_or_else(|| Error::Validation(format!("recipe {} needs an image file", cfg.kind)))?;
            image_input(&load_model_image(p, cfg.image_size)?, cfg)?
        };
        let mut full = vec![1];
        full.extend(shape);
        out.push((name.to_string(), Tensor::new(full, data)?));
    }
    Ok(out)
}
