//! The segmentation network: a strided backbone ending in a dilated
//! (cascade-atrous) block, an atrous spatial pyramid pooling head and a 1×1
//! classifier whose logits are bilinearly upsampled back to the crop size.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ops::{
    bilinear_upsample, bilinear_upsample_backward, concat_channels, conv2d_backward, conv2d_forward,
    global_avg_pool, global_avg_pool_backward, relu, relu_backward, split_channels, ConvGeometry, Mode,
    NormCache,
};
use crate::ops::norm::{batchnorm_backward, batchnorm_forward, DEFAULT_EPS, DEFAULT_MOMENTUM};
use crate::tensor::{he_init, Real, SplitMix64, Tensor};

use super::ModelConfig;

/// Gradients keyed by parameter name.
pub type Gradients<T> = BTreeMap<String, Tensor<T>>;

/// One convolution, optionally followed by batch norm and ReLU.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvUnit {
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
    pub norm: bool,
    pub relu: bool,
}

impl ConvUnit {
    fn new(name: impl Into<String>, cin: usize, cout: usize, kernel: usize, stride: usize, dilation: usize) -> Self {
        Self {
            name: name.into(),
            in_channels: cin,
            out_channels: cout,
            kernel,
            stride,
            dilation,
            norm: true,
            relu: true,
        }
    }

    fn plain(mut self) -> Self {
        self.norm = false;
        self
    }

    fn linear(mut self) -> Self {
        self.norm = false;
        self.relu = false;
        self
    }

    fn geometry(&self) -> ConvGeometry {
        ConvGeometry::same(self.kernel, self.stride, self.dilation).expect("units use odd kernels")
    }

    fn param(&self, suffix: &str) -> String {
        format!("{}.{suffix}", self.name)
    }
}

/// Layer plan derived from a [`ModelConfig`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub backbone: Vec<ConvUnit>,
    /// 1×1 branch followed by one 3×3 branch per atrous rate.
    pub aspp_branches: Vec<ConvUnit>,
    /// 1×1 conv applied to the globally pooled features.
    pub aspp_pool: ConvUnit,
    pub aspp_project: ConvUnit,
    pub classifier: ConvUnit,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let c = cfg.base_channels;
        let normed = |u: ConvUnit| if cfg.norm_enabled { u } else { u.plain() };
        let mut backbone = vec![normed(ConvUnit::new("stem", 3, c, 3, 2, 1))];
        let mut width = c;
        for block in 1..=3 {
            let out = width * 2;
            backbone.push(normed(ConvUnit::new(format!("block{block}.conv1"), width, out, 3, 2, 1)));
            backbone.push(normed(ConvUnit::new(format!("block{block}.conv2"), out, out, 3, 1, 1)));
            width = out;
        }
        for i in 1..=2 {
            backbone.push(normed(ConvUnit::new(format!("cascade.conv{i}"), width, width, 3, 1, 2)));
        }

        let branch = 2 * c;
        let mut aspp_branches = vec![normed(ConvUnit::new("aspp.branch0", width, branch, 1, 1, 1))];
        for (i, &rate) in cfg.aspp_rates.iter().enumerate() {
            aspp_branches.push(normed(ConvUnit::new(
                format!("aspp.branch{}", i + 1),
                width,
                branch,
                3,
                1,
                rate,
            )));
        }
        let aspp_pool = ConvUnit::new("aspp.pool", width, branch, 1, 1, 1).plain();
        let concat = branch * (aspp_branches.len() + 1);
        let aspp_project = normed(ConvUnit::new("aspp.project", concat, width, 1, 1, 1));
        let classifier = ConvUnit::new("classifier", width, cfg.num_classes, 1, 1, 1).linear();
        Self {
            backbone,
            aspp_branches,
            aspp_pool,
            aspp_project,
            classifier,
        }
    }

    /// Every unit in construction order.
    pub fn units(&self) -> impl Iterator<Item = &ConvUnit> {
        self.backbone
            .iter()
            .chain(&self.aspp_branches)
            .chain([&self.aspp_pool, &self.aspp_project, &self.classifier])
    }
}

/// Named-parameter registry plus configuration and step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct SegModel<T = f32> {
    config: ModelConfig,
    layout: Layout,
    params: BTreeMap<String, Tensor<T>>,
    step: u64,
}

/// Saved activations of one [`ConvUnit`].
#[derive(Clone, Debug)]
struct UnitCache<T> {
    input: Tensor<T>,
    norm: Option<NormCache<T>>,
    pre_activation: Tensor<T>,
}

/// Everything the backward pass needs from a train-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    backbone: Vec<UnitCache<T>>,
    branches: Vec<UnitCache<T>>,
    pool: UnitCache<T>,
    project: UnitCache<T>,
    classifier: UnitCache<T>,
    features_shape: Vec<usize>,
    small_logits_shape: Vec<usize>,
}

impl<T> ForwardCache<T> {
    fn units(&self) -> impl Iterator<Item = &UnitCache<T>> {
        self.backbone
            .iter()
            .chain(&self.branches)
            .chain([&self.pool, &self.project, &self.classifier])
    }
}

pub fn is_running_stat(name: &str) -> bool {
    name.ends_with(".running_mean") || name.ends_with(".running_var")
}

impl<T: Real> SegModel<T> {
    /// Builds a freshly initialized model: He-normal conv weights drawn from
    /// a single SplitMix64 stream seeded by `cfg.seed`, zero biases, identity
    /// normalization.
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        let mut rng = SplitMix64::new(cfg.seed);
        let mut params = BTreeMap::new();
        for unit in layout.units() {
            let fan_in = unit.in_channels * unit.kernel * unit.kernel;
            let shape = [unit.out_channels, unit.in_channels, unit.kernel, unit.kernel];
            params.insert(unit.param("weight"), he_init(&mut rng, &shape, fan_in)?);
            let c = unit.out_channels;
            params.insert(unit.param("bias"), Tensor::zeros(&[c]));
            if unit.norm {
                params.insert(unit.param("bn.gamma"), Tensor::new(&[c], T::one())?);
                params.insert(unit.param("bn.beta"), Tensor::zeros(&[c]));
                params.insert(unit.param("bn.running_mean"), Tensor::zeros(&[c]));
                params.insert(unit.param("bn.running_var"), Tensor::new(&[c], T::one())?);
            }
        }
        Ok(Self {
            config: cfg,
            layout,
            params,
            step: 0,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    /// All tensors, including running statistics, in name order.
    pub fn params(&self) -> &BTreeMap<String, Tensor<T>> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&Tensor<T>> {
        self.params.get(name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.params.get_mut(name)
    }

    /// Replaces a tensor, keeping its shape.
    pub fn set_param(&mut self, name: &str, value: Tensor<T>) -> Result<()> {
        let slot = self
            .params
            .get_mut(name)
            .ok_or_else(|| Error::IncompatibleModel(format!("unknown tensor {name}")))?;
        if slot.shape() != value.shape() {
            return Err(Error::IncompatibleModel(format!(
                "{name}: expected shape {:?}, got {:?}",
                slot.shape(),
                value.shape()
            )));
        }
        *slot = value;
        Ok(())
    }

    /// Names of the tensors updated by gradient descent.
    pub fn trainable_names(&self) -> impl Iterator<Item = &String> {
        self.params.keys().filter(|n| !is_running_stat(n))
    }

    /// Number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        self.params
            .iter()
            .filter(|(n, _)| !is_running_stat(n))
            .map(|(_, t)| t.len())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.values().all(Tensor::all_finite)
    }

    /// Same model in another precision.
    pub fn cast<U: Real>(&self) -> SegModel<U> {
        SegModel {
            config: self.config.clone(),
            layout: self.layout.clone(),
            params: self.params.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
            step: self.step,
        }
    }

    fn get(&self, name: &str) -> &Tensor<T> {
        &self.params[name]
    }

    fn unit_forward(&self, unit: &ConvUnit, input: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, UnitCache<T>)> {
        let mut x = conv2d_forward(input, self.get(&unit.param("weight")), self.get(&unit.param("bias")), unit.geometry())?;
        let mut norm = None;
        if unit.norm {
            let (y, cache) = batchnorm_forward(
                &x,
                self.get(&unit.param("bn.gamma")),
                self.get(&unit.param("bn.beta")),
                self.get(&unit.param("bn.running_mean")),
                self.get(&unit.param("bn.running_var")),
                T::from_f64_lossy(DEFAULT_EPS),
                mode,
            )?;
            x = y;
            norm = Some(cache);
        }
        let out = if unit.relu { relu(&x) } else { x.clone() };
        Ok((
            out,
            UnitCache {
                input: input.clone(),
                norm,
                pre_activation: x,
            },
        ))
    }

    fn unit_backward(
        &self,
        unit: &ConvUnit,
        cache: &UnitCache<T>,
        grad_out: &Tensor<T>,
        grads: &mut Gradients<T>,
    ) -> Result<Tensor<T>> {
        let mut g = if unit.relu {
            relu_backward(&cache.pre_activation, grad_out)?
        } else {
            grad_out.clone()
        };
        if let Some(norm) = &cache.norm {
            let (gx, gg, gb) = batchnorm_backward(&g, self.get(&unit.param("bn.gamma")), norm)?;
            grads.insert(unit.param("bn.gamma"), gg);
            grads.insert(unit.param("bn.beta"), gb);
            g = gx;
        }
        let cg = conv2d_backward(
            &cache.input,
            self.get(&unit.param("weight")),
            self.get(&unit.param("bias")),
            unit.geometry(),
            &g,
        )?;
        grads.insert(unit.param("weight"), cg.weight);
        grads.insert(unit.param("bias"), cg.bias);
        Ok(cg.input)
    }

    fn check_images(&self, images: &Tensor<T>) -> Result<()> {
        let (_, c, h, w) = images.dims4()?;
        let crop = self.config.crop;
        if (c, h, w) != (3, crop, crop) {
            return Err(Error::shape(format!(
                "model expects images [N, 3, {crop}, {crop}], got {:?}",
                images.shape()
            )));
        }
        Ok(())
    }

    fn backbone_forward(&self, images: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, Vec<UnitCache<T>>)> {
        let mut x = images.clone();
        let mut caches = Vec::with_capacity(self.layout.backbone.len());
        for unit in &self.layout.backbone {
            let (y, cache) = self.unit_forward(unit, &x, mode)?;
            caches.push(cache);
            x = y;
        }
        Ok((x, caches))
    }

    /// Backbone feature map `[N, 8C, h, w]` with `h = (crop - 1) / 16 + 1`.
    pub fn features(&self, images: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_images(images)?;
        Ok(self.backbone_forward(images, Mode::Infer)?.0)
    }

    #[allow(clippy::type_complexity)]
    fn aspp_impl(
        &self,
        features: &Tensor<T>,
        mode: Mode,
    ) -> Result<(Tensor<T>, Vec<UnitCache<T>>, UnitCache<T>, UnitCache<T>)> {
        let (_, c, h, w) = features.dims4()?;
        let expected = self.layout.aspp_project.out_channels;
        if c != expected {
            return Err(Error::shape(format!("aspp expects {expected} channels, got {c}")));
        }
        let mut outs = Vec::new();
        let mut caches = Vec::new();
        for unit in &self.layout.aspp_branches {
            let (y, cache) = self.unit_forward(unit, features, mode)?;
            outs.push(y);
            caches.push(cache);
        }
        let pooled = global_avg_pool(features)?;
        let (p, pool_cache) = self.unit_forward(&self.layout.aspp_pool, &pooled, mode)?;
        outs.push(bilinear_upsample(&p, h, w)?);
        let refs: Vec<&Tensor<T>> = outs.iter().collect();
        let cat = concat_channels(&refs)?;
        let (y, project_cache) = self.unit_forward(&self.layout.aspp_project, &cat, mode)?;
        Ok((y, caches, pool_cache, project_cache))
    }

    /// Atrous spatial pyramid pooling: a 1×1 branch, one 3×3 branch per atrous
    /// rate, and an image-level pooled branch broadcast back to `h×w`, all
    /// concatenated and projected back to the input width.
    pub fn aspp_forward(&self, features: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.aspp_impl(features, Mode::Infer)?.0)
    }

    /// Concatenated (pre-projection) pyramid output, for inspecting branch widths.
    pub fn aspp_concat(&self, features: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.aspp_impl(features, Mode::Infer)?.3.input)
    }

    /// Logits `[N, num_classes, crop, crop]`.
    pub fn forward(&self, images: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        Ok(self.forward_impl(images, mode)?.0)
    }

    /// Train-mode forward pass that keeps the activations for [`Self::backward`].
    pub fn forward_with_cache(&self, images: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.forward_impl(images, mode)
    }

    fn forward_impl(&self, images: &Tensor<T>, mode: Mode) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.check_images(images)?;
        let (features, backbone) = self.backbone_forward(images, mode)?;
        let (aspp, branches, pool, project) = self.aspp_impl(&features, mode)?;
        let (small, classifier) = self.unit_forward(&self.layout.classifier, &aspp, mode)?;
        let crop = self.config.crop;
        let logits = bilinear_upsample(&small, crop, crop)?;
        let cache = ForwardCache {
            backbone,
            branches,
            pool,
            project,
            classifier,
            features_shape: features.shape().to_vec(),
            small_logits_shape: small.shape().to_vec(),
        };
        Ok((logits, cache))
    }

    /// Gradients of every trainable tensor given `d loss / d logits`.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_logits: &Tensor<T>) -> Result<Gradients<T>> {
        let mut grads = Gradients::new();
        let layout = &self.layout;
        let g_small = bilinear_upsample_backward(&cache.small_logits_shape, grad_logits)?;
        let g_aspp = self.unit_backward(&layout.classifier, &cache.classifier, &g_small, &mut grads)?;
        let g_cat = self.unit_backward(&layout.aspp_project, &cache.project, &g_aspp, &mut grads)?;

        let branch_width = layout.aspp_pool.out_channels;
        let widths = vec![branch_width; layout.aspp_branches.len() + 1];
        let parts = split_channels(&g_cat, &widths)?;
        let mut g_feat = Tensor::new(&cache.features_shape, T::zero())?;
        for ((unit, unit_cache), g) in layout.aspp_branches.iter().zip(&cache.branches).zip(&parts) {
            let gi = self.unit_backward(unit, unit_cache, g, &mut grads)?;
            g_feat.axpy(T::one(), &gi)?;
        }
        let g_pool_out = bilinear_upsample_backward(cache.pool.pre_activation.shape(), &parts[parts.len() - 1])?;
        let g_pooled = self.unit_backward(&layout.aspp_pool, &cache.pool, &g_pool_out, &mut grads)?;
        g_feat.axpy(T::one(), &global_avg_pool_backward(&cache.features_shape, &g_pooled)?)?;

        let mut g = g_feat;
        for (unit, unit_cache) in layout.backbone.iter().zip(&cache.backbone).rev() {
            g = self.unit_backward(unit, unit_cache, &g, &mut grads)?;
        }
        Ok(grads)
    }

    /// Folds train-mode batch statistics into the running estimates.
    pub fn update_running_stats(&mut self, cache: &ForwardCache<T>) {
        let momentum = T::from_f64_lossy(DEFAULT_MOMENTUM);
        let units: Vec<ConvUnit> = self.layout.units().cloned().collect();
        for (unit, unit_cache) in units.iter().zip(cache.units()) {
            let Some(norm) = &unit_cache.norm else { continue };
            let mut mean = self.params.remove(&unit.param("bn.running_mean")).expect("norm unit");
            let mut var = self.params.remove(&unit.param("bn.running_var")).expect("norm unit");
            norm.update_running(&mut mean, &mut var, momentum);
            self.params.insert(unit.param("bn.running_mean"), mean);
            self.params.insert(unit.param("bn.running_var"), var);
        }
    }
}
