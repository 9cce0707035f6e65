//! Overfits the network on a handful of synthetic lesions and reports the
//! training-set Jaccard as it goes.
//!
//! ```text
//! cargo run --release --example overfit -- [samples] [steps]
//! ```

use std::time::Instant;

use lesionseg::data::{normalize, synth_generate, SynthOpts};
use lesionseg::eval::{aggregate, mask_jaccard};
use lesionseg::model::{BatchSampler, ModelConfig, SegModel, TrainConfig};

fn main() -> lesionseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map_or(8, |a| a.parse().expect("sample count"));
    let steps: u64 = args.next().map_or(2000, |a| a.parse().expect("step count"));

    let samples = synth_generate(&SynthOpts {
        count,
        seed: 1,
        size: 65,
        hair_prob: 0.0,
        ..SynthOpts::default()
    });
    let mut model = SegModel::<f32>::new(ModelConfig {
        seed: 7,
        ..ModelConfig::test_profile()
    })?;
    println!("parameters: {}", model.parameter_count());

    let cfg = TrainConfig {
        max_steps: steps,
        ..TrainConfig::default()
    };
    let mut sampler = BatchSampler::new(&samples, 65, 11)?;
    let start = Instant::now();
    let mut window = Vec::new();
    for chunk in 0..steps.div_ceil(100) {
        let n = 100.min(steps - chunk * 100);
        let history = model.fit(&mut sampler, &cfg, n, |_| {})?;
        window.extend(history.iter().map(|m| m.loss));
        let scores: Vec<f64> = samples
            .iter()
            .map(|s| mask_jaccard(&model.predict(&normalize(&s.rgb_image()).unwrap()).unwrap(), &s.mask).unwrap())
            .collect();
        let summary = aggregate(&scores, 0.65)?;
        let mean_loss = window.iter().sum::<f64>() / window.len() as f64;
        window.clear();
        println!(
            "step {:5}  loss {:.4}  lr {:.2e}  train jaccard {:.3}  ({:.1}s)",
            model.step(),
            mean_loss,
            history.last().map_or(0.0, |m| m.lr),
            summary.mean,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
