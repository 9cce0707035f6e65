use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters of a [`SegModel`](super::SegModel).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_classes: usize,
    /// Square input size in pixels; must be `1 (mod output_stride)`.
    pub crop: usize,
    pub output_stride: usize,
    /// Dilations of the three 3×3 pyramid branches.
    pub aspp_rates: Vec<usize>,
    /// Width `C` of the stem; deeper stages use 2C, 4C and 8C.
    pub base_channels: usize,
    pub norm_enabled: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_classes: 2,
            crop: 513,
            output_stride: 16,
            aspp_rates: vec![6, 12, 18],
            base_channels: 32,
            norm_enabled: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Small profile used by the tests: 65×65 crops, 16 base channels.
    pub fn test_profile() -> Self {
        Self {
            crop: 65,
            base_channels: 16,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_classes < 2 {
            return bad(format!("num_classes must be at least 2, got {}", self.num_classes));
        }
        if self.output_stride != 16 {
            return bad(format!(
                "the backbone has a fixed output stride of 16, got {}",
                self.output_stride
            ));
        }
        if self.crop < 17 || self.crop % self.output_stride != 1 {
            return bad(format!(
                "crop {} must be 1 (mod {}) and at least 17",
                self.crop, self.output_stride
            ));
        }
        if self.aspp_rates.is_empty() || self.aspp_rates[0] == 0 {
            return bad("aspp rates must be non-empty and at least 1".into());
        }
        if self.aspp_rates.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("aspp rates {:?} must be strictly increasing", self.aspp_rates));
        }
        if self.base_channels == 0 {
            return bad("base_channels must be at least 1".into());
        }
        Ok(())
    }

    /// Side of the backbone feature map: `(crop - 1) / output_stride + 1`.
    pub fn feature_size(&self) -> usize {
        (self.crop - 1) / self.output_stride + 1
    }
}
