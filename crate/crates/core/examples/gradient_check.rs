//! Checks the analytic gradients of the whole network against central
//! finite differences in double precision, one parameter tensor at a time.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use lesionseg::model::{ModelConfig, SegModel};
use lesionseg::ops::{weighted_ce_loss, LossConfig, Mode};
use lesionseg::{SplitMix64, Tensor};

fn random(shape: &[usize], rng: &mut SplitMix64) -> Tensor<f64> {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.uniform() * 2.0 - 1.0).collect()).unwrap()
}

fn main() -> lesionseg::Result<()> {
    let model = SegModel::<f64>::new(ModelConfig {
        crop: 33,
        base_channels: 4,
        seed: 1,
        ..ModelConfig::default()
    })?;
    let mut rng = SplitMix64::new(2);
    let images = random(&[2, 3, 33, 33], &mut rng);
    let labels: Vec<u8> = (0..2 * 33 * 33).map(|i| (i % 33 > 12) as u8).collect();
    let loss_cfg = LossConfig::default();
    let (loss, grads, _) = model.loss_and_gradients(&images, &labels, &loss_cfg, Mode::Train)?;
    println!("loss {loss:.6}");

    let h = 1e-7;
    let mut worst = 0.0f64;
    for name in model.trainable_names() {
        let dir = random(model.param(name).unwrap().shape(), &mut rng);
        let analytic = grads[name].dot(&dir);
        let at = |sign: f64| {
            let mut m = model.clone();
            m.param_mut(name).unwrap().axpy(sign * h, &dir).unwrap();
            let logits = m.forward(&images, Mode::Train).unwrap();
            weighted_ce_loss(&logits, &labels, &loss_cfg).unwrap().0
        };
        let numeric = (at(1.0) - at(-1.0)) / (2.0 * h);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
        worst = worst.max(rel);
        println!("  {name:<28} analytic {analytic:>12.5e}  numeric {numeric:>12.5e}  rel {rel:.1e}");
    }
    println!("worst relative error {worst:.1e}");
    Ok(())
}
