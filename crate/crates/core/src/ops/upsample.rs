//! Corner-aligned bilinear resampling.
//!
//! Output index `o` samples source coordinate `o * (in - 1) / (out - 1)`, so
//! the four corners map exactly onto the source corners and `33 -> 513` is an
//! exact ×16 scale.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// One output position along an axis: two source taps and the weight of the second.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tap {
    pub lo: usize,
    pub hi: usize,
    pub frac: f64,
}

/// Interpolation taps for resampling an axis of length `input` to `output`.
pub fn axis_taps(input: usize, output: usize) -> Result<Vec<Tap>> {
    if input == 0 || output == 0 {
        return Err(Error::geometry(format!(
            "cannot resample length {input} to {output}"
        )));
    }
    Ok((0..output)
        .map(|o| {
            if input == 1 || output == 1 {
                return Tap { lo: 0, hi: 0, frac: 0.0 };
            }
            let num = o * (input - 1);
            let den = output - 1;
            let lo = num / den;
            let frac = (num % den) as f64 / den as f64;
            Tap {
                lo,
                hi: (lo + 1).min(input - 1),
                frac,
            }
        })
        .collect())
}

pub fn bilinear_upsample<T: Real>(input: &Tensor<T>, out_h: usize, out_w: usize) -> Result<Tensor<T>> {
    let (n, c, h, w) = input.dims4()?;
    let ys = axis_taps(h, out_h)?;
    let xs = axis_taps(w, out_w)?;
    let mut out = Tensor::zeros(&[n, c, out_h, out_w]);
    let src = input.data();
    for (plane, dst) in out.data_mut().chunks_exact_mut(out_h * out_w).enumerate() {
        let s = &src[plane * h * w..(plane + 1) * h * w];
        for (oy, ty) in ys.iter().enumerate() {
            let fy = T::from_f64_lossy(ty.frac);
            let (r0, r1) = (&s[ty.lo * w..(ty.lo + 1) * w], &s[ty.hi * w..(ty.hi + 1) * w]);
            for (ox, tx) in xs.iter().enumerate() {
                let fx = T::from_f64_lossy(tx.frac);
                let top = r0[tx.lo] + (r0[tx.hi] - r0[tx.lo]) * fx;
                let bottom = r1[tx.lo] + (r1[tx.hi] - r1[tx.lo]) * fx;
                dst[oy * out_w + ox] = top + (bottom - top) * fy;
            }
        }
    }
    Ok(out)
}

/// Transpose of [`bilinear_upsample`]: each output gradient is accumulated
/// into its four source cells with the forward weights.
pub fn bilinear_upsample_backward<T: Real>(input_shape: &[usize], grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let &[n, c, h, w] = input_shape else {
        return Err(Error::shape(format!("expected NCHW shape, got {input_shape:?}")));
    };
    let (gn, gc, out_h, out_w) = grad_out.dims4()?;
    if (gn, gc) != (n, c) {
        return Err(Error::shape(format!(
            "grad_out {:?} does not match input {input_shape:?}",
            grad_out.shape()
        )));
    }
    let ys = axis_taps(h, out_h)?;
    let xs = axis_taps(w, out_w)?;
    let mut grad = Tensor::new(input_shape, T::zero())?;
    for (plane, g) in grad_out.data().chunks_exact(out_h * out_w).enumerate() {
        let dst = &mut grad.data_mut()[plane * h * w..(plane + 1) * h * w];
        for (oy, ty) in ys.iter().enumerate() {
            let fy = T::from_f64_lossy(ty.frac);
            for (ox, tx) in xs.iter().enumerate() {
                let fx = T::from_f64_lossy(tx.frac);
                let v = g[oy * out_w + ox];
                let top = v * (T::one() - fy);
                let bottom = v * fy;
                dst[ty.lo * w + tx.lo] += top * (T::one() - fx);
                dst[ty.lo * w + tx.hi] += top * fx;
                dst[ty.hi * w + tx.lo] += bottom * (T::one() - fx);
                dst[ty.hi * w + tx.hi] += bottom * fx;
            }
        }
    }
    Ok(grad)
}
