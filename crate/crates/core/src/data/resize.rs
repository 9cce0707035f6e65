use crate::error::{Error, Result};
use crate::ops::upsample::axis_taps;

use super::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    /// Corner-aligned bilinear, rounded to the nearest integer.
    Bilinear,
    /// Source index `round(o * (in - 1) / (out - 1))`, halves rounded up.
    Nearest,
}

/// Source index for nearest-neighbour resampling of one axis.
pub fn nearest_index(o: usize, input: usize, output: usize) -> usize {
    if input == 1 || output == 1 {
        return 0;
    }
    let den = output - 1;
    (2 * o * (input - 1) + den) / (2 * den)
}

pub fn resize(image: &Image, out_h: usize, out_w: usize, mode: Interpolation) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::geometry(format!("cannot resize to {out_h}x{out_w}")));
    }
    let (h, w, ch) = (image.height, image.width, image.channels);
    let src = &image.data;
    let mut out = vec![0u8; out_h * out_w * ch];
    match mode {
        Interpolation::Nearest => {
            let xs: Vec<usize> = (0..out_w).map(|o| nearest_index(o, w, out_w)).collect();
            for oy in 0..out_h {
                let sy = nearest_index(oy, h, out_h);
                for (ox, &sx) in xs.iter().enumerate() {
                    let s = (sy * w + sx) * ch;
                    let d = (oy * out_w + ox) * ch;
                    out[d..d + ch].copy_from_slice(&src[s..s + ch]);
                }
            }
        }
        Interpolation::Bilinear => {
            let ys = axis_taps(h, out_h)?;
            let xs = axis_taps(w, out_w)?;
            let at = |y: usize, x: usize, c: usize| src[(y * w + x) * ch + c] as f64;
            for (oy, ty) in ys.iter().enumerate() {
                for (ox, tx) in xs.iter().enumerate() {
                    for c in 0..ch {
                        let top = at(ty.lo, tx.lo, c) + (at(ty.lo, tx.hi, c) - at(ty.lo, tx.lo, c)) * tx.frac;
                        let bottom = at(ty.hi, tx.lo, c) + (at(ty.hi, tx.hi, c) - at(ty.hi, tx.lo, c)) * tx.frac;
                        let v = top + (bottom - top) * ty.frac;
                        out[(oy * out_w + ox) * ch + c] = v.round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
        }
    }
    Image::new(out_w, out_h, ch, out)
}

/// Resizes a single-channel mask with [`Interpolation::Nearest`], which
/// preserves the value set.
pub fn resize_mask(mask: &[u8], h: usize, w: usize, out_h: usize, out_w: usize) -> Result<Vec<u8>> {
    let img = Image::gray(w, h, mask.to_vec())?;
    Ok(resize(&img, out_h, out_w, Interpolation::Nearest)?.data)
}
