use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{GraphBuilder, LayerSpec};

/// Small convolutional feature extractor: `[conv k×k → relu → maxpool]` per
/// entry of `filters`, then flatten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneConfig {
    /// Per-sample input `[C, H, W]`.
    pub input: [usize; 3],
    pub filters: Vec<usize>,
    pub kernel: usize,
    pub pool: usize,
}

impl Default for BackboneConfig {
    /// 128×128 RGB, four blocks, flattening to 4096 features.
    fn default() -> Self {
        Self {
            input: [3, 128, 128],
            filters: vec![16, 32, 64, 64],
            kernel: 3,
            pool: 2,
        }
    }
}

impl BackboneConfig {
    pub fn with_input(mut self, input: [usize; 3]) -> Self {
        self.input = input;
        self
    }

    /// Divides every filter count by `divisor` (at least one filter each).
    pub fn scaled(mut self, divisor: usize) -> Self {
        self.filters = self.filters.iter().map(|&f| scale(f, divisor)).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters.is_empty() || self.filters.contains(&0) || self.kernel == 0 || self.pool < 2 {
            return Err(Error::param(format!("invalid backbone {self:?}")));
        }
        let [c, h, w] = self.input;
        let div = self.pool.pow(self.filters.len() as u32);
        if c == 0 || h % div != 0 || w % div != 0 {
            return Err(Error::shape(format!(
                "backbone input {:?} must have spatial sides divisible by {div}",
                self.input
            )));
        }
        Ok(())
    }

    /// Length of the flat feature vector.
    pub fn feature_dim(&self) -> usize {
        let div = self.pool.pow(self.filters.len() as u32);
        self.filters.last().copied().unwrap_or(0) * (self.input[1] / div) * (self.input[2] / div)
    }

    /// Appends the stack after `from`; returns the flatten node's name.
    pub fn append(&self, b: &mut GraphBuilder, prefix: &str, from: &str) -> Result<String> {
        self.validate()?;
        b.from(from);
        for &f in &self.filters {
            b.push(prefix, LayerSpec::Conv2d { filters: f, kernel: [self.kernel; 2] });
            b.push(prefix, LayerSpec::Relu);
            b.push(prefix, LayerSpec::MaxPool2d { pool: self.pool });
        }
        Ok(b.push(prefix, LayerSpec::Flatten))
    }
}

pub(crate) fn scale(filters: usize, divisor: usize) -> usize {
    (filters / divisor.max(1)).max(1)
}
