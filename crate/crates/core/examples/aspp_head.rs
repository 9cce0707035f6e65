//! Walks a full-resolution (513×513) image through the network and prints
//! the tensor shapes at the backbone output, inside the atrous pyramid and
//! at the logits.
//!
//! ```text
//! cargo run --release --example aspp_head
//! ```

use lesionseg::model::{ModelConfig, SegModel};
use lesionseg::ops::Mode;
use lesionseg::{SplitMix64, Tensor};

fn main() -> lesionseg::Result<()> {
    let cfg = ModelConfig::default();
    let model = SegModel::<f32>::new(cfg.clone())?;
    println!(
        "crop {}  output stride {}  atrous rates {:?}  trainable parameters {}",
        cfg.crop,
        cfg.output_stride,
        cfg.aspp_rates,
        model.parameter_count()
    );
    for unit in model.layout().units() {
        println!(
            "  {:<16} {:>4} -> {:<4} k{} s{} d{}",
            unit.name, unit.in_channels, unit.out_channels, unit.kernel, unit.stride, unit.dilation
        );
    }

    let mut rng = SplitMix64::new(0);
    let pixels = (0..3 * cfg.crop * cfg.crop).map(|_| rng.uniform() as f32 * 2.0 - 1.0).collect();
    let image = Tensor::from_vec(&[1, 3, cfg.crop, cfg.crop], pixels)?;
    let features = model.features(&image)?;
    println!("backbone features {:?}", features.shape());
    println!("pyramid concat    {:?}", model.aspp_concat(&features)?.shape());
    println!("pyramid output    {:?}", model.aspp_forward(&features)?.shape());
    println!("logits            {:?}", model.forward(&image, Mode::Infer)?.shape());
    Ok(())
}
