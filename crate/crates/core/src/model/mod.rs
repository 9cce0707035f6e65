//! Segmentation network, training step, prediction and checkpoints.

mod checkpoint;
mod config;
mod network;
mod predict;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint,
    Checkpoint, CHECKPOINT_MAGIC,
};
pub use config::ModelConfig;
pub use network::{is_running_stat, ConvUnit, ForwardCache, Gradients, Layout, SegModel};
pub use predict::argmax_mask;
pub use train::{BatchSampler, StepMetrics, TrainConfig};
