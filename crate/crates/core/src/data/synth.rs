//! Synthetic dermoscopy-like images: a skin-toned background with an
//! irregular dark lesion, optionally crossed by hair strands.
//!
//! Every sample is generated from its own SplitMix64 stream derived from
//! `(seed, index)`, so the first `k` samples do not depend on `count`.

use std::f64::consts::PI;

use crate::tensor::SplitMix64;

use super::{Image, Sample};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOpts {
    pub count: usize,
    pub seed: u64,
    pub size: usize,
    /// Probability that a sample gets hair strands drawn over it.
    pub hair_prob: f64,
    /// Accepted range of the mask foreground fraction.
    pub fg_fraction: (f64, f64),
}

impl Default for SynthOpts {
    fn default() -> Self {
        Self {
            count: 1,
            seed: 0,
            size: 513,
            hair_prob: 0.3,
            fg_fraction: (0.05, 0.45),
        }
    }
}

/// Lesion outline: a rotated ellipse whose radius is modulated by a few
/// low-order sinusoids of the polar angle.
#[derive(Clone, Debug, PartialEq)]
pub struct LesionShape {
    pub cx: f64,
    pub cy: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub rotation: f64,
    /// `(order, amplitude, phase)` terms of the border perturbation.
    pub harmonics: Vec<(f64, f64, f64)>,
}

impl LesionShape {
    /// Whether the centre of pixel `(x, y)` lies inside the lesion.
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let dx = x as f64 + 0.5 - self.cx;
        let dy = y as f64 + 0.5 - self.cy;
        let (s, c) = self.rotation.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        let dist = u.hypot(v);
        if dist == 0.0 {
            return true;
        }
        let phi = v.atan2(u);
        let (a, b) = (self.semi_major, self.semi_minor);
        let ellipse = a * b / ((b * phi.cos()).powi(2) + (a * phi.sin()).powi(2)).sqrt();
        let wobble: f64 = self.harmonics.iter().map(|&(k, amp, ph)| amp * (k * phi + ph).sin()).sum();
        dist <= ellipse * (1.0 + wobble)
    }

    /// Rasterized region on a `size`×`size` grid, 0/1 per pixel.
    pub fn region(&self, size: usize) -> Vec<u8> {
        (0..size * size).map(|i| self.contains(i % size, i / size) as u8).collect()
    }
}

/// A generated sample together with the shape that produced its mask.
#[derive(Clone, Debug)]
pub struct SynthSample {
    pub sample: Sample,
    pub shape: LesionShape,
    pub has_hair: bool,
}

fn sample_rng(seed: u64, index: usize) -> SplitMix64 {
    let mut mixer = SplitMix64::new(seed ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    SplitMix64::new(mixer.next_u64())
}

fn range(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

fn random_shape(rng: &mut SplitMix64, size: usize, (lo, hi): (f64, f64)) -> LesionShape {
    let s = size as f64;
    let fraction = range(rng, lo, hi);
    let aspect = range(rng, 0.6, 1.0);
    let semi_major = (fraction * s * s / (PI * aspect)).sqrt();
    let harmonics = (0..3)
        .map(|i| (2.0 + i as f64 + rng.below(2) as f64, range(rng, 0.0, 0.08), range(rng, 0.0, 2.0 * PI)))
        .collect();
    LesionShape {
        cx: s / 2.0 + range(rng, -0.08, 0.08) * s,
        cy: s / 2.0 + range(rng, -0.08, 0.08) * s,
        semi_major,
        semi_minor: semi_major * aspect,
        rotation: range(rng, 0.0, PI),
        harmonics,
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn render(rng: &mut SplitMix64, size: usize, shape: &LesionShape, mask: &[u8]) -> Vec<f64> {
    let s = size as f64;
    let skin = [range(rng, 195.0, 235.0), range(rng, 150.0, 190.0), range(rng, 120.0, 160.0)];
    let lesion = [range(rng, 80.0, 140.0), range(rng, 45.0, 90.0), range(rng, 30.0, 70.0)];
    let light_angle = range(rng, 0.0, 2.0 * PI);
    let light = range(rng, 10.0, 30.0);
    let (ly, lx) = light_angle.sin_cos();
    let mottle_phase = range(rng, 0.0, 2.0 * PI);
    let mottle_freq = range(rng, 4.0, 9.0) / s;

    let mut pixels = vec![0.0; size * size * 3];
    for y in 0..size {
        for x in 0..size {
            let i = y * size + x;
            let nx = (x as f64 + 0.5) / s - 0.5;
            let ny = (y as f64 + 0.5) / s - 0.5;
            let shade = light * (nx * lx + ny * ly);
            let base = if mask[i] == 1 {
                let r = ((x as f64 + 0.5 - shape.cx).hypot(y as f64 + 0.5 - shape.cy)) / shape.semi_major;
                let mottle = 12.0 * ((x as f64 * mottle_freq * 2.0 * PI + mottle_phase).sin()
                    * (y as f64 * mottle_freq * 2.0 * PI).cos());
                lesion.map(|c| c - 25.0 * (1.0 - r).max(0.0) + mottle)
            } else {
                skin
            };
            for c in 0..3 {
                let noise = (rng.uniform() - 0.5) * 16.0;
                pixels[i * 3 + c] = base[c] + shade + noise;
            }
        }
    }
    pixels
}

/// Draws dark anti-aliased circular arcs onto the image only.
fn draw_hair(rng: &mut SplitMix64, size: usize, pixels: &mut [f64]) {
    let s = size as f64;
    let strands = 3 + rng.below(6);
    let color = [range(rng, 20.0, 50.0), range(rng, 15.0, 40.0), range(rng, 10.0, 35.0)];
    for _ in 0..strands {
        // Large circles centred off-image give gently curved strands.
        let radius = range(rng, 0.6, 2.0) * s;
        let angle = range(rng, 0.0, 2.0 * PI);
        let (ay, ax) = angle.sin_cos();
        let through_x = range(rng, 0.1, 0.9) * s;
        let through_y = range(rng, 0.1, 0.9) * s;
        let (cx, cy) = (through_x - ax * radius, through_y - ay * radius);
        let half_width = range(rng, 0.5, 1.2) * (s / 128.0).max(0.5);
        for y in 0..size {
            for x in 0..size {
                let d = ((x as f64 + 0.5 - cx).hypot(y as f64 + 0.5 - cy) - radius).abs();
                let alpha = (half_width + 0.5 - d).clamp(0.0, 1.0);
                if alpha > 0.0 {
                    let i = (y * size + x) * 3;
                    for c in 0..3 {
                        pixels[i + c] = pixels[i + c] * (1.0 - alpha) + color[c] * alpha;
                    }
                }
            }
        }
    }
}

/// Generates one sample; the mask is exactly `shape.region(size)`.
pub fn synth_one(opts: &SynthOpts, index: usize) -> SynthSample {
    let mut rng = sample_rng(opts.seed, index);
    let size = opts.size;
    let (lo, hi) = opts.fg_fraction;
    let (shape, mask) = loop {
        let shape = random_shape(&mut rng, size, (lo, hi));
        let mask = shape.region(size);
        let fraction = mask.iter().map(|&v| v as f64).sum::<f64>() / (size * size) as f64;
        if (lo..=hi).contains(&fraction) {
            break (shape, mask);
        }
    };
    let mut pixels = render(&mut rng, size, &shape, &mask);
    let has_hair = rng.uniform() < opts.hair_prob;
    if has_hair {
        draw_hair(&mut rng, size, &mut pixels);
    }
    let image = Image::rgb(size, size, pixels.into_iter().map(clamp_u8).collect()).expect("size >= 1");
    let sample = Sample::new(format!("synth_{index:05}"), &image, mask).expect("generator emits valid samples");
    SynthSample {
        sample,
        shape,
        has_hair,
    }
}

/// Generates `opts.count` samples.
pub fn synth_generate(opts: &SynthOpts) -> Vec<Sample> {
    (0..opts.count).map(|i| synth_one(opts, i).sample).collect()
}
