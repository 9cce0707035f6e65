//! Images, resizing, normalization, synthetic lesions and packed records.

mod netpbm;
mod records;
mod resize;
mod sample;
pub mod synth;

pub use netpbm::{decode_netpbm, encode_netpbm, read_netpbm, write_netpbm, Image};
pub use records::{decode_records, encode_records, pack_records, read_records, RECORD_MAGIC};
pub use resize::{nearest_index, resize, resize_mask, Interpolation};
pub use sample::{normalize, Sample};
pub use synth::{synth_generate, synth_one, LesionShape, SynthOpts, SynthSample};
