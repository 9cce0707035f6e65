//! Generates synthetic dermoscopy-like samples (irregular lesions on a skin
//! tone, some with hair strands) and writes them as PPM/PGM pairs.
//!
//! ```text
//! cargo run --example synth_dataset -- [out_dir] [count] [size]
//! ```

use lesionseg::data::{synth_one, write_netpbm, Image, SynthOpts};

fn main() -> lesionseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "synth_out".into());
    let count: usize = args.next().map_or(6, |a| a.parse().expect("count"));
    let size: usize = args.next().map_or(129, |a| a.parse().expect("size"));
    let opts = SynthOpts {
        count,
        size,
        seed: 42,
        ..SynthOpts::default()
    };
    std::fs::create_dir_all(&out).map_err(|e| lesionseg::Error::io(&out, e))?;

    for index in 0..count {
        let s = synth_one(&opts, index);
        let shape = &s.shape;
        println!(
            "{}  centre ({:.0}, {:.0})  axes {:.1}/{:.1}  lesion {:>5.1}%  hair {}",
            s.sample.id,
            shape.cx,
            shape.cy,
            shape.semi_major,
            shape.semi_minor,
            100.0 * s.sample.foreground_fraction(),
            s.has_hair
        );
        let dir = std::path::Path::new(&out);
        write_netpbm(dir.join(format!("{}.ppm", s.sample.id)), &s.sample.rgb_image())?;
        let mask = s.sample.mask.iter().map(|&v| v * 255).collect();
        write_netpbm(dir.join(format!("{}_mask.pgm", s.sample.id)), &Image::gray(size, size, mask)?)?;
    }
    println!("wrote {count} pairs to {out}/");
    Ok(())
}
