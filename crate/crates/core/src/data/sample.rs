use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

use super::resize::{resize, resize_mask, Interpolation};
use super::Image;

/// One training or evaluation item: RGB image, binary lesion mask and the
/// dimensions the image had before it was resized for the network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub height: usize,
    pub width: usize,
    /// Interleaved RGB, `height * width * 3` bytes.
    pub image: Vec<u8>,
    /// `height * width` bytes, each 0 or 1.
    pub mask: Vec<u8>,
    pub orig_h: usize,
    pub orig_w: usize,
}

impl Sample {
    pub fn new(id: impl Into<String>, image: &Image, mask: Vec<u8>) -> Result<Self> {
        if image.channels != 3 {
            return Err(Error::shape(format!("sample images are RGB, got {} channels", image.channels)));
        }
        let sample = Self {
            id: id.into(),
            height: image.height,
            width: image.width,
            image: image.data.clone(),
            mask,
            orig_h: image.height,
            orig_w: image.width,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<()> {
        let area = self.height * self.width;
        if area == 0 || self.orig_h == 0 || self.orig_w == 0 {
            return Err(Error::geometry(format!("sample {} has a zero dimension", self.id)));
        }
        if self.image.len() != area * 3 || self.mask.len() != area {
            return Err(Error::shape(format!(
                "sample {}: image/mask sizes do not match {}x{}",
                self.id, self.height, self.width
            )));
        }
        if let Some((index, &value)) = self.mask.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::InvalidMask { index, value });
        }
        Ok(())
    }

    pub fn rgb_image(&self) -> Image {
        Image::rgb(self.width, self.height, self.image.clone()).expect("validated sample")
    }

    /// Image bilinear, mask nearest, both to `size`×`size`; original dims kept.
    pub fn resized(&self, size: usize) -> Result<Self> {
        if (self.height, self.width) == (size, size) {
            return Ok(self.clone());
        }
        let image = resize(&self.rgb_image(), size, size, Interpolation::Bilinear)?;
        let mask = resize_mask(&self.mask, self.height, self.width, size, size)?;
        Ok(Self {
            id: self.id.clone(),
            height: size,
            width: size,
            image: image.data,
            mask,
            orig_h: self.orig_h,
            orig_w: self.orig_w,
        })
    }

    pub fn foreground_fraction(&self) -> f64 {
        self.mask.iter().map(|&v| v as usize).sum::<usize>() as f64 / self.mask.len() as f64
    }
}

/// Maps 8-bit values onto `[-1, 1]` via `v / 127.5 - 1`, returning a planar
/// `[3, H, W]` tensor from interleaved RGB.
pub fn normalize<T: Real>(image: &Image) -> Result<Tensor<T>> {
    if image.channels != 3 {
        return Err(Error::shape(format!("normalize expects RGB, got {} channels", image.channels)));
    }
    let area = image.width * image.height;
    let mut data = vec![T::zero(); 3 * area];
    for (i, px) in image.data.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * area + i] = T::from_f64_lossy(px[c] as f64 / 127.5 - 1.0);
        }
    }
    Tensor::from_vec(&[3, image.height, image.width], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_endpoints() {
        let img = Image::rgb(1, 1, vec![0, 255, 51]).unwrap();
        let t = normalize::<f64>(&img).unwrap();
        assert_eq!(t.shape(), &[3, 1, 1]);
        assert_eq!(t.data()[0], -1.0);
        assert_eq!(t.data()[1], 1.0);
        assert!((t.data()[2] + 0.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_binary_mask() {
        let img = Image::rgb(2, 1, vec![0; 6]).unwrap();
        assert!(matches!(
            Sample::new("a", &img, vec![0, 7]),
            Err(Error::InvalidMask { index: 1, value: 7 })
        ));
    }
}
