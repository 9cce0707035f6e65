//! Lesion segmentation with atrous convolutions.
//!
//! The crate covers the whole pipeline: NetPBM images and packed record
//! files ([`data`]), a dilated-convolution network with an atrous spatial
//! pyramid pooling head trained by plain SGD ([`model`]), the primitive
//! layers it is built from ([`ops`]), and per-image Jaccard evaluation
//! ([`eval`]). The `lesionseg` binary wires these together as subcommands
//! ([`cli`]).

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod ops;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{he_init, Real, SplitMix64, Tensor};
