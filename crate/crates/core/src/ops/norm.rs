//! Per-channel batch normalization.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Normalize with batch statistics and update the running estimates.
    Train,
    /// Normalize with the frozen running estimates.
    Infer,
}

/// Scale/shift parameters and running statistics of one normalization layer.
#[derive(Clone, Debug, PartialEq)]
pub struct NormParams<T = f32> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: T,
    pub eps: T,
}

impl<T: Real> NormParams<T> {
    /// Identity-initialized layer: gamma 1, beta 0, running mean 0, running var 1.
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::new(&[channels], T::one()).expect("channels >= 1"),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::new(&[channels], T::one()).expect("channels >= 1"),
            momentum: T::from_f64_lossy(DEFAULT_MOMENTUM),
            eps: T::from_f64_lossy(DEFAULT_EPS),
        }
    }
}

/// Values saved by the forward pass for [`batchnorm_backward`].
#[derive(Clone, Debug)]
pub struct NormCache<T> {
    pub normalized: Tensor<T>,
    pub inv_std: Vec<T>,
    pub mode: Mode,
    /// Per-channel batch mean and (biased) variance; empty in infer mode.
    pub batch_mean: Vec<T>,
    pub batch_var: Vec<T>,
}

impl<T: Real> NormCache<T> {
    /// Folds the batch statistics into running estimates:
    /// `running = momentum * running + (1 - momentum) * batch`.
    pub fn update_running(&self, mean: &mut Tensor<T>, var: &mut Tensor<T>, momentum: T) {
        if self.mode != Mode::Train {
            return;
        }
        let mix = T::one() - momentum;
        for (r, &b) in mean.data_mut().iter_mut().zip(&self.batch_mean) {
            *r = momentum * *r + mix * b;
        }
        for (r, &b) in var.data_mut().iter_mut().zip(&self.batch_var) {
            *r = momentum * *r + mix * b;
        }
    }
}

/// `y = gamma * (x - mean) / sqrt(var + eps) + beta`, per channel.
///
/// Train mode normalizes with batch statistics (returned in the cache for
/// [`NormCache::update_running`]); infer mode uses the running estimates.
pub fn batchnorm_forward<T: Real>(
    input: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running_mean: &Tensor<T>,
    running_var: &Tensor<T>,
    eps: T,
    mode: Mode,
) -> Result<(Tensor<T>, NormCache<T>)> {
    let (n, c, h, w) = input.dims4()?;
    for (name, t) in [
        ("gamma", gamma),
        ("beta", beta),
        ("running_mean", running_mean),
        ("running_var", running_var),
    ] {
        if t.shape() != [c] {
            return Err(Error::shape(format!(
                "{name} shape {:?} does not match {c} channels",
                t.shape()
            )));
        }
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidConfig("batchnorm eps must be positive".into()));
    }
    let area = h * w;
    let count = n * area;
    if mode == Mode::Train && count < 2 {
        return Err(Error::DegenerateBatch(count));
    }
    let x = input.data();
    let plane = |b: usize, ch: usize| &x[(b * c + ch) * area..(b * c + ch + 1) * area];

    let mut inv_std = vec![T::zero(); c];
    let mut shift = vec![T::zero(); c];
    let (mut batch_mean, mut batch_var) = (Vec::new(), Vec::new());
    let count_t = T::from_usize(count).unwrap();
    for ch in 0..c {
        let (mean, var) = match mode {
            Mode::Train => {
                let mean = (0..n).map(|b| plane(b, ch).iter().copied().sum::<T>()).sum::<T>() / count_t;
                let var = (0..n)
                    .map(|b| plane(b, ch).iter().map(|&v| (v - mean) * (v - mean)).sum::<T>())
                    .sum::<T>()
                    / count_t;
                batch_mean.push(mean);
                batch_var.push(var);
                (mean, var)
            }
            Mode::Infer => (running_mean.data()[ch], running_var.data()[ch].max(T::zero())),
        };
        inv_std[ch] = T::one() / (var + eps).sqrt();
        shift[ch] = mean;
    }

    let mut normalized = Tensor::zeros_like(input);
    let mut out = Tensor::zeros_like(input);
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * area;
            let (g, bt, m, s) = (gamma.data()[ch], beta.data()[ch], shift[ch], inv_std[ch]);
            for i in off..off + area {
                let xh = (x[i] - m) * s;
                normalized.data_mut()[i] = xh;
                out.data_mut()[i] = g * xh + bt;
            }
        }
    }
    Ok((
        out,
        NormCache {
            normalized,
            inv_std,
            mode,
            batch_mean,
            batch_var,
        },
    ))
}

/// Gradients `(input, gamma, beta)` of [`batchnorm_forward`].
pub fn batchnorm_backward<T: Real>(
    grad_out: &Tensor<T>,
    gamma: &Tensor<T>,
    cache: &NormCache<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    if grad_out.shape() != cache.normalized.shape() {
        return Err(Error::shape(format!(
            "grad_out {:?} vs cached {:?}",
            grad_out.shape(),
            cache.normalized.shape()
        )));
    }
    let (n, c, h, w) = grad_out.dims4()?;
    let area = h * w;
    let count = T::from_usize(n * area).unwrap();
    let g = grad_out.data();
    let xh = cache.normalized.data();
    let mut grad_gamma = Tensor::zeros(&[c]);
    let mut grad_beta = Tensor::zeros(&[c]);
    let mut grad_in = Tensor::zeros_like(grad_out);

    for ch in 0..c {
        let mut sum_g = T::zero();
        let mut sum_gx = T::zero();
        for b in 0..n {
            let off = (b * c + ch) * area;
            for i in off..off + area {
                sum_g += g[i];
                sum_gx += g[i] * xh[i];
            }
        }
        grad_beta.data_mut()[ch] = sum_g;
        grad_gamma.data_mut()[ch] = sum_gx;
        let scale = gamma.data()[ch] * cache.inv_std[ch];
        for b in 0..n {
            let off = (b * c + ch) * area;
            for i in off..off + area {
                grad_in.data_mut()[i] = match cache.mode {
                    Mode::Infer => scale * g[i],
                    Mode::Train => scale * (g[i] - sum_g / count - xh[i] * sum_gx / count),
                };
            }
        }
    }
    Ok((grad_in, grad_gamma, grad_beta))
}

impl<T: Real> NormParams<T> {
    pub fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, NormCache<T>)> {
        let (out, cache) = batchnorm_forward(
            input,
            &self.gamma,
            &self.beta,
            &self.running_mean,
            &self.running_var,
            self.eps,
            mode,
        )?;
        cache.update_running(&mut self.running_mean, &mut self.running_var, self.momentum);
        Ok((out, cache))
    }
}
