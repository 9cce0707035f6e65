//! Max pooling and global average pooling.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Output of [`maxpool2d`]: pooled values plus, for every output cell, the
/// flat input index that produced it.
#[derive(Clone, Debug)]
pub struct MaxPoolOutput<T> {
    pub output: Tensor<T>,
    pub argmax: Vec<usize>,
}

/// Max pooling with a `kernel`×`kernel` window. Ties go to the first
/// element of the window in row-major order.
pub fn maxpool2d<T: Real>(input: &Tensor<T>, kernel: usize, stride: usize) -> Result<MaxPoolOutput<T>> {
    let (n, c, h, w) = input.dims4()?;
    if kernel == 0 || stride == 0 {
        return Err(Error::geometry("pool kernel and stride must be at least 1"));
    }
    if h < kernel || w < kernel {
        return Err(Error::geometry(format!(
            "pool window {kernel} larger than input {h}x{w}"
        )));
    }
    let ho = (h - kernel) / stride + 1;
    let wo = (w - kernel) / stride + 1;
    let mut output = Tensor::zeros(&[n, c, ho, wo]);
    let mut argmax = Vec::with_capacity(n * c * ho * wo);
    let src = input.data();
    let dst = output.data_mut();
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..ho {
            for ox in 0..wo {
                let mut best = base + oy * stride * w + ox * stride;
                for ky in 0..kernel {
                    for kx in 0..kernel {
                        let idx = base + (oy * stride + ky) * w + ox * stride + kx;
                        if src[idx] > src[best] {
                            best = idx;
                        }
                    }
                }
                dst[argmax.len()] = src[best];
                argmax.push(best);
            }
        }
    }
    Ok(MaxPoolOutput { output, argmax })
}

/// Routes each output gradient to the input element recorded in `argmax`.
pub fn maxpool2d_backward<T: Real>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    if argmax.len() != grad_out.len() {
        return Err(Error::shape(format!(
            "{} argmax entries for {} gradients",
            argmax.len(),
            grad_out.len()
        )));
    }
    let mut grad = Tensor::new(input_shape, T::zero())?;
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        grad.data_mut()[idx] += g;
    }
    Ok(grad)
}

/// Mean over H×W per channel: `[N, C, H, W] -> [N, C, 1, 1]`.
pub fn global_avg_pool<T: Real>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, c, h, w) = input.dims4()?;
    let area = h * w;
    let scale = T::one() / T::from_usize(area).unwrap();
    let data = input
        .data()
        .chunks_exact(area)
        .map(|plane| plane.iter().copied().sum::<T>() * scale)
        .collect();
    Tensor::from_vec(&[n, c, 1, 1], data)
}

/// Spreads each pooled gradient uniformly, `g / (H·W)`, over its plane.
pub fn global_avg_pool_backward<T: Real>(input_shape: &[usize], grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let &[n, c, h, w] = input_shape else {
        return Err(Error::shape(format!("expected NCHW shape, got {input_shape:?}")));
    };
    if grad_out.shape() != [n, c, 1, 1] {
        return Err(Error::shape(format!(
            "grad_out {:?} does not match pooled shape",
            grad_out.shape()
        )));
    }
    let area = h * w;
    let scale = T::one() / T::from_usize(area).unwrap();
    let mut grad = Tensor::new(input_shape, T::zero())?;
    for (plane, &g) in grad.data_mut().chunks_exact_mut(area).zip(grad_out.data()) {
        plane.fill(g * scale);
    }
    Ok(grad)
}
