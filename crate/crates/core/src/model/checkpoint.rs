//! `LSCKPT1` checkpoints.
//!
//! Little-endian layout: magic `LSCKPT1`, `u64` step, `u32` tensor count,
//! then per tensor `u16` name length, UTF-8 name, `u8` rank, `u32` dims and
//! raw `f32` data. Tensors are written in name order. The architecture is
//! stored alongside the weights as two `meta.*` tensors so a checkpoint can
//! be loaded without any other configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{ModelConfig, SegModel};

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"LSCKPT1";

const META_CONFIG: &str = "meta.config";
const META_RATES: &str = "meta.aspp_rates";

/// Raw checkpoint contents: a step counter and named `f32` tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub tensors: BTreeMap<String, Tensor<f32>>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCheckpoint(msg.into())
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&ckpt.step.to_le_bytes());
    let count = u32::try_from(ckpt.tensors.len()).map_err(|_| corrupt("too many tensors"))?;
    out.extend_from_slice(&count.to_le_bytes());
    for (name, t) in &ckpt.tensors {
        let len = u16::try_from(name.len()).map_err(|_| corrupt(format!("tensor name too long: {name}")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let rank = u8::try_from(t.shape().len()).map_err(|_| corrupt(format!("{name}: rank too large")))?;
        out.push(rank);
        for &d in t.shape() {
            let d = u32::try_from(d).map_err(|_| corrupt(format!("{name}: dimension {d} overflows u32")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt(format!("truncated at byte {} (needed {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(CHECKPOINT_MAGIC.len()).ok() != Some(CHECKPOINT_MAGIC.as_slice()) {
        return Err(corrupt("bad magic, expected LSCKPT1"));
    }
    let step = u64::from_le_bytes(cur.array()?);
    let count = u32::from_le_bytes(cur.array()?);
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let len = u16::from_le_bytes(cur.array()?) as usize;
        let name = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| corrupt("tensor name is not UTF-8"))?
            .to_owned();
        let rank = cur.take(1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u32::from_le_bytes(cur.array()?) as usize);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| corrupt(format!("{name}: shape overflows")))?;
        let raw = cur.take(numel.checked_mul(4).ok_or_else(|| corrupt(format!("{name}: too large")))?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let tensor = Tensor::from_vec(&shape, data).map_err(|e| corrupt(format!("{name}: {e}")))?;
        if tensors.insert(name.clone(), tensor).is_some() {
            return Err(corrupt(format!("duplicate tensor {name}")));
        }
    }
    if cur.pos != bytes.len() {
        return Err(corrupt(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Ok(Checkpoint { step, tensors })
}

pub fn write_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(ckpt)?).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

fn meta_tensor(values: &[usize]) -> Tensor<f32> {
    Tensor::from_vec(&[values.len()], values.iter().map(|&v| v as f32).collect()).expect("non-empty meta")
}

fn meta_values(ckpt: &Checkpoint, name: &str) -> Result<Vec<usize>> {
    let t = ckpt
        .tensors
        .get(name)
        .ok_or_else(|| Error::IncompatibleModel(format!("checkpoint has no {name} tensor")))?;
    t.data()
        .iter()
        .map(|&v| {
            (v >= 0.0 && v.fract() == 0.0 && v < 16_777_216.0)
                .then_some(v as usize)
                .ok_or_else(|| corrupt(format!("{name}: non-integer value {v}")))
        })
        .collect()
}

impl SegModel<f32> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let cfg = self.config();
        let mut tensors = self.params().clone();
        tensors.insert(
            META_CONFIG.into(),
            meta_tensor(&[
                cfg.crop,
                cfg.output_stride,
                cfg.num_classes,
                cfg.base_channels,
                cfg.norm_enabled as usize,
            ]),
        );
        tensors.insert(META_RATES.into(), meta_tensor(&cfg.aspp_rates));
        Checkpoint {
            step: self.step(),
            tensors,
        }
    }

    /// Rebuilds a model from checkpoint contents. Every model tensor must be
    /// present with the right shape and no unknown tensors are allowed.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let meta = meta_values(ckpt, META_CONFIG)?;
        let [crop, output_stride, num_classes, base_channels, norm] = meta[..] else {
            return Err(Error::IncompatibleModel(format!("{META_CONFIG} must hold 5 values")));
        };
        let cfg = ModelConfig {
            num_classes,
            crop,
            output_stride,
            aspp_rates: meta_values(ckpt, META_RATES)?,
            base_channels,
            norm_enabled: norm != 0,
            seed: 0,
        };
        cfg.validate()
            .map_err(|e| Error::IncompatibleModel(format!("stored configuration: {e}")))?;
        let mut model = SegModel::new(cfg)?;
        for (name, t) in &ckpt.tensors {
            if name == META_CONFIG || name == META_RATES {
                continue;
            }
            model.set_param(name, t.clone())?;
        }
        let stored = ckpt.tensors.len() - 2;
        if stored != model.params().len() {
            let missing: Vec<&String> = model.params().keys().filter(|k| !ckpt.tensors.contains_key(*k)).collect();
            return Err(Error::IncompatibleModel(format!("checkpoint is missing {missing:?}")));
        }
        model.set_step(ckpt.step);
        Ok(model)
    }
}

pub fn save_checkpoint(model: &SegModel<f32>, path: impl AsRef<Path>) -> Result<()> {
    write_checkpoint(&model.to_checkpoint(), path)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SegModel<f32>> {
    SegModel::from_checkpoint(&read_checkpoint(path)?)
}
