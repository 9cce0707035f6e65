//! Resizes samples to the network input size, packs them into an LSR1
//! record file and reads them back.
//!
//! ```text
//! cargo run --example records
//! ```

use lesionseg::data::{decode_records, encode_records, synth_generate, SynthOpts};

fn main() -> lesionseg::Result<()> {
    let raw = synth_generate(&SynthOpts {
        count: 4,
        size: 200,
        seed: 3,
        ..SynthOpts::default()
    });
    let resized = raw.iter().map(|s| s.resized(65)).collect::<lesionseg::Result<Vec<_>>>()?;
    let bytes = encode_records(&resized)?;
    println!("{} records, {} bytes", resized.len(), bytes.len());

    let back = decode_records(&bytes)?;
    assert_eq!(back, resized);
    for s in &back {
        println!(
            "  {}  {}x{} (original {}x{})  foreground {:.1}%",
            s.id,
            s.height,
            s.width,
            s.orig_h,
            s.orig_w,
            100.0 * s.foreground_fraction()
        );
    }

    let mut damaged = bytes.clone();
    damaged.truncate(bytes.len() - 10);
    println!("truncated file: {}", decode_records(&damaged).unwrap_err());
    Ok(())
}
