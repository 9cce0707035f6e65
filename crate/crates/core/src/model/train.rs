use crate::data::{normalize, Sample};
use crate::error::{Error, Result};
use crate::ops::{weighted_ce_loss, LossConfig, Mode, PolyDecay};
use crate::tensor::{Real, SplitMix64, Tensor};

use super::network::{is_running_stat, ForwardCache, Gradients, SegModel};

/// Optimization hyperparameters. Defaults: learning rate 0.001, foreground
/// loss weight 100, batch 2, 100 steps, poly decay power 0.9.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub base_lr: f64,
    pub fg_weight: f64,
    pub batch: usize,
    /// Horizon of the polynomial decay; the rate reaches zero here.
    pub max_steps: u64,
    pub decay_power: f64,
    /// Seed of the data order.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            base_lr: 0.001,
            fg_weight: 100.0,
            batch: 2,
            max_steps: 100,
            decay_power: PolyDecay::DEFAULT_POWER,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr >= 0.0 && self.base_lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("base_lr {} must be non-negative", self.base_lr)));
        }
        if !(self.fg_weight > 0.0) {
            return Err(Error::InvalidConfig(format!("fg_weight {} must be positive", self.fg_weight)));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch must be at least 1".into()));
        }
        if !(self.decay_power > 0.0) {
            return Err(Error::InvalidConfig("decay power must be positive".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> PolyDecay {
        PolyDecay {
            base_lr: self.base_lr,
            max_steps: self.max_steps,
            power: self.decay_power,
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig::with_foreground_weight(self.fg_weight)
    }
}

/// Outcome of one [`SegModel::train_step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    /// Step index the update was taken at (the counter before incrementing).
    pub step: u64,
    /// Loss before the update.
    pub loss: f64,
    pub lr: f64,
}

impl<T: Real> SegModel<T> {
    /// Forward and backward pass without touching the parameters.
    pub fn loss_and_gradients(
        &self,
        images: &Tensor<T>,
        labels: &[u8],
        loss: &LossConfig,
        mode: Mode,
    ) -> Result<(f64, Gradients<T>, ForwardCache<T>)> {
        let (logits, cache) = self.forward_with_cache(images, mode)?;
        let (value, grad_logits) = weighted_ce_loss(&logits, labels, loss)?;
        if !value.is_finite() {
            return Err(Error::TrainingDiverged { step: self.step() });
        }
        let grads = self.backward(&cache, &grad_logits)?;
        Ok((value, grads, cache))
    }

    /// One plain SGD step, `theta -= lr(step) * grad`, on a batch of images
    /// `[N, 3, crop, crop]` with labels `N*crop*crop` in {0, 1}.
    ///
    /// A non-finite loss or gradient aborts with
    /// [`Error::TrainingDiverged`] and leaves the model unchanged.
    pub fn train_step(&mut self, images: &Tensor<T>, labels: &[u8], cfg: &TrainConfig) -> Result<StepMetrics> {
        cfg.validate()?;
        let step = self.step();
        let lr = cfg.schedule().lr_at_step(step);
        let (loss, grads, cache) = self.loss_and_gradients(images, labels, &cfg.loss_config(), Mode::Train)?;
        if !grads.values().all(Tensor::all_finite) {
            return Err(Error::TrainingDiverged { step });
        }
        self.apply_gradients(&grads, lr)?;
        self.update_running_stats(&cache);
        if !self.all_finite() {
            return Err(Error::TrainingDiverged { step });
        }
        self.set_step(step + 1);
        Ok(StepMetrics { step, loss, lr })
    }

    /// `theta -= lr * grad` for every trainable tensor.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>, lr: f64) -> Result<()> {
        let names: Vec<String> = self.trainable_names().cloned().collect();
        let scale = T::from_f64_lossy(-lr);
        for name in names {
            let grad = grads
                .get(&name)
                .ok_or_else(|| Error::IncompatibleModel(format!("no gradient for {name}")))?;
            self.param_mut(&name).expect("listed name").axpy(scale, grad)?;
        }
        if let Some(extra) = grads.keys().find(|k| is_running_stat(k) || self.param(k).is_none()) {
            return Err(Error::IncompatibleModel(format!("gradient for unknown tensor {extra}")));
        }
        Ok(())
    }
}

/// Cycles through samples in a seed-shuffled order, reshuffling every epoch.
/// Samples are resized to the crop and normalized once up front.
#[derive(Clone, Debug)]
pub struct BatchSampler {
    crop: usize,
    inputs: Vec<Tensor<f32>>,
    masks: Vec<Vec<u8>>,
    order: Vec<usize>,
    cursor: usize,
    rng: SplitMix64,
}

impl BatchSampler {
    pub fn new(samples: &[Sample], crop: usize, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("no training samples".into()));
        }
        let mut inputs = Vec::with_capacity(samples.len());
        let mut masks = Vec::with_capacity(samples.len());
        for s in samples {
            let s = s.resized(crop)?;
            inputs.push(normalize(&s.rgb_image())?);
            masks.push(s.mask);
        }
        let mut rng = SplitMix64::new(seed);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        rng.shuffle(&mut order);
        Ok(Self {
            crop,
            inputs,
            masks,
            order,
            cursor: 0,
            rng,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn next_index(&mut self) -> usize {
        if self.cursor == self.order.len() {
            self.rng.shuffle(&mut self.order);
            self.cursor = 0;
        }
        self.cursor += 1;
        self.order[self.cursor - 1]
    }

    /// Images `[batch, 3, crop, crop]` and their concatenated labels.
    pub fn next_batch(&mut self, batch: usize) -> (Tensor<f32>, Vec<u8>) {
        let area = self.crop * self.crop;
        let mut data = Vec::with_capacity(batch * 3 * area);
        let mut labels = Vec::with_capacity(batch * area);
        for _ in 0..batch {
            let i = self.next_index();
            data.extend_from_slice(self.inputs[i].data());
            labels.extend_from_slice(&self.masks[i]);
        }
        let images = Tensor::from_vec(&[batch, 3, self.crop, self.crop], data).expect("batch >= 1");
        (images, labels)
    }
}

impl SegModel<f32> {
    /// Runs `steps` training steps, calling `on_step` after each one.
    pub fn fit(
        &mut self,
        sampler: &mut BatchSampler,
        cfg: &TrainConfig,
        steps: u64,
        mut on_step: impl FnMut(&StepMetrics),
    ) -> Result<Vec<StepMetrics>> {
        let mut history = Vec::with_capacity(steps as usize);
        for _ in 0..steps {
            let (images, labels) = sampler.next_batch(cfg.batch);
            let metrics = self.train_step(&images, &labels, cfg)?;
            on_step(&metrics);
            history.push(metrics);
        }
        Ok(history)
    }
}
