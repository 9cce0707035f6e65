//! Dilated (atrous) convolution: a 3×3 kernel whose taps sit `d` pixels
//! apart. Pushes a single impulse through one layer at several rates and
//! prints where the response lands.
//!
//! ```text
//! cargo run --example dilated_conv
//! ```

use lesionseg::ops::{conv2d_forward, ConvGeometry};
use lesionseg::Tensor;

fn main() -> lesionseg::Result<()> {
    let size = 15;
    let mut impulse = Tensor::<f32>::zeros(&[1, 1, size, size]);
    impulse.data_mut()[(size / 2) * size + size / 2] = 1.0;
    let weight = Tensor::new(&[1, 1, 3, 3], 1.0)?;
    let bias = Tensor::zeros(&[1]);

    for dilation in [1, 2, 4] {
        let geom = ConvGeometry::same(3, 1, dilation)?;
        let out = conv2d_forward(&impulse, &weight, &bias, geom)?;
        println!(
            "dilation {dilation}: padding {}, receptive field {}x{}, 9 parameters",
            geom.padding,
            geom.extent(3),
            geom.extent(3)
        );
        for row in out.data().chunks(size) {
            let line: String = row.iter().map(|&v| if v != 0.0 { '#' } else { '.' }).collect();
            println!("  {line}");
        }
    }
    Ok(())
}
