//! The whole pipeline through the library API on a tiny profile: generate
//! data, pack records, train, checkpoint, reload, predict at original size
//! and score against ground truth.
//!
//! ```text
//! cargo run --release --example pipeline -- [steps]
//! ```

use lesionseg::data::{decode_records, encode_records, synth_generate, SynthOpts};
use lesionseg::eval::{mask_jaccard, EvalReport, ImageScore, DEFAULT_THRESHOLD};
use lesionseg::model::{decode_checkpoint, encode_checkpoint, BatchSampler, ModelConfig, SegModel, TrainConfig};

fn main() -> lesionseg::Result<()> {
    let steps: u64 = std::env::args().nth(1).map_or(600, |a| a.parse().expect("steps"));
    let crop = 65;

    // Originals at 97x97, as if they came off a camera at another size.
    let all = synth_generate(&SynthOpts {
        count: 48,
        size: 97,
        seed: 8,
        ..SynthOpts::default()
    });
    let (train, test) = all.split_at(40);
    let packed = encode_records(&train.iter().map(|s| s.resized(crop)).collect::<Result<Vec<_>, _>>()?)?;
    let records = decode_records(&packed)?;

    let mut model = SegModel::<f32>::new(ModelConfig {
        crop,
        base_channels: 16,
        ..ModelConfig::default()
    })?;
    let cfg = TrainConfig {
        base_lr: 0.01,
        fg_weight: 1.0,
        max_steps: steps,
        ..TrainConfig::default()
    };
    let mut sampler = BatchSampler::new(&records, crop, 0)?;
    model.fit(&mut sampler, &cfg, steps, |m| {
        if m.step % 100 == 0 {
            println!("step {:4}  loss {:.4}  lr {:.2e}", m.step, m.loss, m.lr);
        }
    })?;

    let restored = SegModel::from_checkpoint(&decode_checkpoint(&encode_checkpoint(&model.to_checkpoint())?)?)?;
    let scores = test
        .iter()
        .map(|s| {
            let pred = restored.segment(&s.rgb_image())?;
            Ok(ImageScore {
                id: s.id.clone(),
                jaccard: mask_jaccard(&pred, &s.mask)?,
            })
        })
        .collect::<lesionseg::Result<Vec<_>>>()?;
    let report = EvalReport::new(scores, DEFAULT_THRESHOLD)?;
    print!("{}", report.to_csv());
    Ok(())
}
