//! Neural-network primitives, each with a hand-written backward pass.

pub mod activation;
pub mod conv;
pub mod loss;
pub mod norm;
pub mod pool;
pub mod schedule;
pub mod upsample;

#[cfg(test)]
pub(crate) mod testing;

pub use activation::{relu, relu_backward};
pub use conv::{conv2d_backward, conv2d_forward, ConvGeometry, ConvGrads, ConvParams};
pub use loss::{softmax_channels, weighted_ce_loss, LossConfig};
pub use norm::{batchnorm_backward, batchnorm_forward, Mode, NormCache, NormParams};
pub use pool::{global_avg_pool, global_avg_pool_backward, maxpool2d, maxpool2d_backward, MaxPoolOutput};
pub use schedule::PolyDecay;
pub use upsample::{bilinear_upsample, bilinear_upsample_backward};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Concatenates NCHW tensors along the channel axis.
pub fn concat_channels<T: Real>(parts: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::EmptyInput("concat_channels: no inputs".into()))?;
    let (n, _, h, w) = first.dims4()?;
    let mut channels = 0;
    for p in parts {
        let (pn, pc, ph, pw) = p.dims4()?;
        if (pn, ph, pw) != (n, h, w) {
            return Err(Error::shape(format!(
                "cannot concat {:?} with {:?}",
                first.shape(),
                p.shape()
            )));
        }
        channels += pc;
    }
    let area = h * w;
    let mut data = Vec::with_capacity(n * channels * area);
    for b in 0..n {
        for p in parts {
            let pc = p.shape()[1];
            data.extend_from_slice(&p.data()[b * pc * area..(b + 1) * pc * area]);
        }
    }
    Tensor::from_vec(&[n, channels, h, w], data)
}

/// Inverse of [`concat_channels`]: splits along channels into the given widths.
pub fn split_channels<T: Real>(input: &Tensor<T>, widths: &[usize]) -> Result<Vec<Tensor<T>>> {
    let (n, c, h, w) = input.dims4()?;
    if widths.iter().sum::<usize>() != c {
        return Err(Error::shape(format!("widths {widths:?} do not sum to {c} channels")));
    }
    let area = h * w;
    let mut out: Vec<Vec<T>> = widths.iter().map(|&wc| Vec::with_capacity(n * wc * area)).collect();
    for b in 0..n {
        let mut offset = b * c * area;
        for (buf, &wc) in out.iter_mut().zip(widths) {
            buf.extend_from_slice(&input.data()[offset..offset + wc * area]);
            offset += wc * area;
        }
    }
    out.into_iter()
        .zip(widths)
        .map(|(data, &wc)| Tensor::from_vec(&[n, wc, h, w], data))
        .collect()
}
