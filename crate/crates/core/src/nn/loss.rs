use serde::{Deserialize, Serialize};

use super::graph::Outputs;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Floor applied to probabilities before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Output names the losses read from a graph.
pub const PRIMARY_OUTPUT: &str = "probs";
pub const IMAGE_HEAD: &str = "image_probs";
pub const AUDIO_HEAD: &str = "audio_probs";

#[derive(Debug, Clone)]
pub struct LossValue {
    pub value: f64,
    /// Gradient with respect to the prediction tensor.
    pub grad: Tensor,
}

#[derive(Debug, Clone)]
pub struct MultimodalLossValue {
    pub value: f64,
    pub image: LossValue,
    pub sound: LossValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    CrossEntropy,
    MultimodalWeighted { lambda_image: f64, lambda_sound: f64 },
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::CrossEntropy
    }
}

impl LossSpec {
    pub fn multimodal(lambda_image: f64, lambda_sound: f64) -> Result<Self> {
        let s = LossSpec::MultimodalWeighted {
            lambda_image,
            lambda_sound,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if let LossSpec::MultimodalWeighted {
            lambda_image,
            lambda_sound,
        } = *self
        {
            check_lambdas(lambda_image, lambda_sound)?;
            if lambda_image + lambda_sound <= 0.0 {
                return Err(Error::param("modality weights must not both be zero"));
            }
        }
        Ok(())
    }

    /// Training objective over a graph's outputs, with per-output upstream
    /// gradients. The multimodal objective adds the weighted auxiliary head
    /// losses to the fused head's cross-entropy.
    pub fn objective(&self, outputs: &Outputs, target: &Tensor) -> Result<(f64, Vec<(String, Tensor)>)> {
        let fused = outputs
            .get(PRIMARY_OUTPUT)
            .ok_or_else(|| Error::param(format!("graph has no '{PRIMARY_OUTPUT}' output")))?;
        let main = cross_entropy(fused, target)?;
        match *self {
            LossSpec::CrossEntropy => Ok((main.value, vec![(PRIMARY_OUTPUT.into(), main.grad)])),
            LossSpec::MultimodalWeighted {
                lambda_image,
                lambda_sound,
            } => {
                let head = |n: &str| {
                    outputs
                        .get(n)
                        .ok_or_else(|| Error::param(format!("multimodal loss needs a '{n}' output")))
                };
                let mm = multimodal_loss(head(IMAGE_HEAD)?, head(AUDIO_HEAD)?, target, lambda_image, lambda_sound)?;
                Ok((
                    main.value + mm.value,
                    vec![
                        (PRIMARY_OUTPUT.into(), main.grad),
                        (IMAGE_HEAD.into(), mm.image.grad),
                        (AUDIO_HEAD.into(), mm.sound.grad),
                    ],
                ))
            }
        }
    }
}

fn check_lambdas(li: f64, ls: f64) -> Result<()> {
    if !(li >= 0.0 && ls >= 0.0) {
        return Err(Error::param(format!("modality weights must be nonnegative, got ({li}, {ls})")));
    }
    Ok(())
}

/// Mean over the batch of `-Σ y·ln(max(ŷ, LOG_FLOOR))`.
pub fn cross_entropy(pred: &Tensor, target: &Tensor) -> Result<LossValue> {
    if pred.shape() != target.shape() || pred.shape().len() != 2 || pred.batch() == 0 {
        return Err(Error::shape(format!(
            "cross_entropy: prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.batch();
    for i in 0..n {
        let p = pred.row(i);
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || p.iter().any(|&v| v < 0.0) {
            return Err(Error::Precondition(format!(
                "prediction row {i} is not a distribution (sums to {sum})"
            )));
        }
        let t = target.row(i);
        let ones = t.iter().filter(|&&v| v == 1.0).count();
        if ones != 1 || t.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Precondition(format!("target row {i} is not one-hot")));
        }
    }
    let mut value = 0.0;
    let mut grad = Tensor::zeros(pred.shape());
    let scale = 1.0 / n as f64;
    for ((g, &p), &y) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        if y != 0.0 {
            value -= y * p.max(LOG_FLOOR).ln();
            if p > LOG_FLOOR {
                *g = -y / p * scale;
            }
        }
    }
    Ok(LossValue {
        value: value * scale,
        grad,
    })
}

/// `λ_image · CE(image head) + λ_sound · CE(sound head)`.
pub fn multimodal_loss(
    pred_img: &Tensor,
    pred_snd: &Tensor,
    target: &Tensor,
    lambda_image: f64,
    lambda_sound: f64,
) -> Result<MultimodalLossValue> {
    check_lambdas(lambda_image, lambda_sound)?;
    let scale = |mut l: LossValue, w: f64| {
        l.value *= w;
        l.grad.data_mut().iter_mut().for_each(|g| *g *= w);
        l
    };
    let image = scale(cross_entropy(pred_img, target)?, lambda_image);
    let sound = scale(cross_entropy(pred_snd, target)?, lambda_sound);
    Ok(MultimodalLossValue {
        value: image.value + sound.value,
        image,
        sound,
    })
}
