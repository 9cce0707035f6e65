use crate::data::{normalize, resize, resize_mask, Image, Interpolation};
use crate::error::Result;
use crate::ops::Mode;
use crate::tensor::{Real, Tensor};

use super::network::SegModel;

/// Per-pixel argmax over the class axis of `[N, K, H, W]` logits; exact ties
/// resolve to the lowest class index (background).
pub fn argmax_mask<T: Real>(logits: &Tensor<T>) -> Result<Vec<u8>> {
    let (n, k, h, w) = logits.dims4()?;
    let area = h * w;
    let data = logits.data();
    let mut out = Vec::with_capacity(n * area);
    for b in 0..n {
        for i in 0..area {
            let mut best = 0;
            for c in 1..k {
                if data[(b * k + c) * area + i] > data[(b * k + best) * area + i] {
                    best = c;
                }
            }
            out.push(best as u8);
        }
    }
    Ok(out)
}

impl<T: Real> SegModel<T> {
    /// Class mask `crop*crop` for one normalized image `[3, crop, crop]`.
    pub fn predict(&self, image: &Tensor<T>) -> Result<Vec<u8>> {
        let crop = self.config().crop;
        let batch = image.clone().reshape(&[1, 3, crop, crop])?;
        argmax_mask(&self.forward(&batch, Mode::Infer)?)
    }

    /// Full inference path for an RGB image of any size: bilinear resize to
    /// the crop, normalize, predict, then nearest-upscale the mask back to
    /// the image's own dimensions.
    pub fn segment(&self, image: &Image) -> Result<Vec<u8>> {
        let crop = self.config().crop;
        let resized = resize(image, crop, crop, Interpolation::Bilinear)?;
        let mask = self.predict(&normalize(&resized)?)?;
        resize_mask(&mask, crop, crop, image.height, image.width)
    }
}
