//! Channel softmax and the class-weighted cross-entropy.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Per-class loss weights `[background, foreground]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub class_weights: [f64; 2],
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            class_weights: [1.0, 100.0],
        }
    }
}

impl LossConfig {
    pub fn with_foreground_weight(fg: f64) -> Self {
        Self {
            class_weights: [1.0, fg],
        }
    }
}

/// Per-pixel softmax over the channel axis, stabilized by subtracting the
/// per-pixel maximum.
pub fn softmax_channels<T: Real>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, k, h, w) = logits.dims4()?;
    if k < 2 {
        return Err(Error::shape(format!("softmax needs at least 2 channels, got {k}")));
    }
    let area = h * w;
    let src = logits.data();
    let mut out = Tensor::zeros_like(logits);
    let dst = out.data_mut();
    for b in 0..n {
        let base = b * k * area;
        for i in 0..area {
            let at = |c: usize| base + c * area + i;
            let max = (0..k).map(|c| src[at(c)]).fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for c in 0..k {
                let e = (src[at(c)] - max).exp();
                dst[at(c)] = e;
                total += e;
            }
            for c in 0..k {
                dst[at(c)] = dst[at(c)] / total;
            }
        }
    }
    Ok(out)
}

/// Weighted cross-entropy normalized by the total weight:
/// `sum_i w_i * -ln p_i[y_i] / sum_i w_i`, with `w_i = class_weights[y_i]`.
///
/// Returns the loss and its exact gradient with respect to the logits.
pub fn weighted_ce_loss<T: Real>(
    logits: &Tensor<T>,
    labels: &[u8],
    cfg: &LossConfig,
) -> Result<(f64, Tensor<T>)> {
    let (n, k, h, w) = logits.dims4()?;
    if k != 2 {
        return Err(Error::shape(format!("binary loss needs 2 logit channels, got {k}")));
    }
    let area = h * w;
    if labels.len() != n * area {
        return Err(Error::shape(format!(
            "{} labels for logits {:?}",
            labels.len(),
            logits.shape()
        )));
    }
    if cfg.class_weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "class weights must be positive, got {:?}",
            cfg.class_weights
        )));
    }
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
        return Err(Error::InvalidLabel {
            index,
            value: value as i64,
        });
    }

    let probs = softmax_channels(logits)?;
    let total_weight: f64 = labels.iter().map(|&l| cfg.class_weights[l as usize]).sum();
    let mut loss = 0.0;
    let mut grad = probs.clone();
    let p = probs.data();
    let g = grad.data_mut();
    for b in 0..n {
        for i in 0..area {
            let label = labels[b * area + i] as usize;
            let wi = cfg.class_weights[label];
            let scale = T::from_f64_lossy(wi / total_weight);
            for c in 0..2 {
                let idx = (b * 2 + c) * area + i;
                if c == label {
                    // ln p computed from the logit gap for accuracy when p -> 1.
                    let gap = logits.data()[(b * 2 + 1 - c) * area + i] - logits.data()[idx];
                    loss += wi * softplus(gap.as_f64());
                    g[idx] = (p[idx] - T::one()) * scale;
                } else {
                    g[idx] = p[idx] * scale;
                }
            }
        }
    }
    Ok((loss / total_weight, grad))
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
