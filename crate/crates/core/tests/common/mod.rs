//! Oracles shared by the integration tests.

#![allow(dead_code)]

use lesionseg::{SplitMix64, Tensor};

pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = SplitMix64::new(seed);
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.uniform() * 2.0 - 1.0).collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Relative error used throughout: `|a - n| / max(|a|, |n|, 1e-3)`.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Worst relative error between `analytic` and element-wise central
/// differences of `f` at `x`, step `1e-5 * max(1, |x_i|)`.
pub fn max_fd_error(x: &Tensor<f64>, analytic: &Tensor<f64>, f: impl Fn(&Tensor<f64>) -> f64) -> f64 {
    assert_eq!(x.shape(), analytic.shape());
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x.data()[i];
        let h = 1e-5 * orig.abs().max(1.0);
        probe.data_mut()[i] = orig + h;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - h;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        worst = worst.max(rel_err(analytic.data()[i], (plus - minus) / (2.0 * h)));
    }
    worst
}

/// Fixed random projection `<r, y>` turning a tensor output into a scalar,
/// so that its gradient with respect to `y` is `r`.
pub fn projection(shape: &[usize], seed: u64) -> (Tensor<f64>, impl Fn(&Tensor<f64>) -> f64) {
    let r = random_tensor(shape, seed);
    let r2 = r.clone();
    (r, move |y: &Tensor<f64>| y.dot(&r2))
}

/// Brute-force Jaccard: build the foreground coordinate sets and compare.
pub fn jaccard_by_sets(pred: &[u8], gt: &[u8], width: usize) -> f64 {
    use std::collections::BTreeSet;
    let set = |m: &[u8]| -> BTreeSet<(usize, usize)> {
        m.iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| (i / width, i % width))
            .collect()
    };
    let (a, b) = (set(pred), set(gt));
    let union = a.union(&b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    }
}
