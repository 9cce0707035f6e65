//! Finite-difference oracle shared by the op unit tests.

use crate::tensor::{SplitMix64, Tensor};

pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = SplitMix64::new(seed);
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.uniform() * 2.0 - 1.0).collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Compares `analytic` against central differences of `f` at `x`, element
/// by element, with step `1e-5 * max(1, |x_i|)`.
pub fn check_gradient(
    x: &Tensor<f64>,
    analytic: &Tensor<f64>,
    f: impl Fn(&Tensor<f64>) -> f64,
    tol: f64,
) {
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
        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic.data()[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
        worst = worst.max(rel);
    }
    assert!(worst <= tol, "max relative error {worst:e} exceeds {tol:e}");
}
