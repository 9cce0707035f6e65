//! Dense row-major tensors, the SplitMix64 generator and He initialization.
//!
//! Activations are laid out NCHW. Tensors are generic over [`Real`] so that
//! the same kernels run in `f32` for training and in `f64` for gradient
//! verification.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

/// Floating-point element type usable by every kernel in the crate.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    /// `c = alpha * a * b + beta * c` for row-major `a: m×k`, `b: k×n`, `c: m×n`,
    /// each operand addressed through explicit row and column strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        a_strides: (isize, isize),
        b: &[Self],
        b_strides: (isize, isize),
        beta: Self,
        c: &mut [Self],
        c_strides: (isize, isize),
    );

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

fn check_gemm_extent(len: usize, rows: usize, cols: usize, strides: (isize, isize)) {
    if rows == 0 || cols == 0 {
        return;
    }
    assert!(strides.0 >= 0 && strides.1 >= 0, "negative gemm stride");
    let last = (rows - 1) * strides.0 as usize + (cols - 1) * strides.1 as usize;
    assert!(last < len, "gemm operand out of bounds");
}

macro_rules! impl_real {
    ($t:ty, $gemm:path) => {
        impl Real for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                a_strides: (isize, isize),
                b: &[Self],
                b_strides: (isize, isize),
                beta: Self,
                c: &mut [Self],
                c_strides: (isize, isize),
            ) {
                check_gemm_extent(a.len(), m, k, a_strides);
                check_gemm_extent(b.len(), k, n, b_strides);
                check_gemm_extent(c.len(), m, n, c_strides);
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: every operand extent was bounds-checked above.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        a_strides.0,
                        a_strides.1,
                        b.as_ptr(),
                        b_strides.0,
                        b_strides.1,
                        beta,
                        c.as_mut_ptr(),
                        c_strides.0,
                        c_strides.1,
                    )
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::sgemm);
impl_real!(f64, matrixmultiply::dgemm);

/// Dense N-dimensional array stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

fn checked_len(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::InvalidShape(shape.to_vec()));
    }
    Ok(shape.iter().product())
}

impl<T: Real> Tensor<T> {
    /// A tensor of the given shape with every element set to `fill`.
    pub fn new(shape: &[usize], fill: T) -> Result<Self> {
        let len = checked_len(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![fill; len],
        })
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let len = checked_len(shape)?;
        if data.len() != len {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Zero tensor; panics on an invalid shape, for internal construction
    /// where the shape is already known to be valid.
    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(shape, T::zero()).expect("zeros: invalid shape")
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self {
            shape: other.shape.clone(),
            data: vec![T::zero(); other.data.len()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Interprets the tensor as NCHW.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match *self.shape.as_slice() {
            [n, c, h, w] => Ok((n, c, h, w)),
            _ => Err(Error::shape(format!(
                "expected a 4-d NCHW tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let len = checked_len(shape)?;
        if len != self.data.len() {
            return Err(Error::shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-type conversion, e.g. `f32` parameters into an `f64` check.
    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.as_f64()))
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += scale * other`, elementwise.
    pub fn axpy(&mut self, scale: T, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "axpy: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// SplitMix64 pseudo-random generator.
///
/// Output `i` for seed `s` is the standard SplitMix64 mix of
/// `s + (i + 1) * 0x9E3779B97F4A7C15`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (multiply-shift, negligible bias for small `n`).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Pair of independent standard normals by the Box–Muller transform.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        // 1 - u1 lies in (0, 1], so the logarithm is finite.
        let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<E>(&mut self, items: &mut [E]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// He-normal initialization: every element drawn from `N(0, 2 / fan_in)`.
pub fn he_init<T: Real>(rng: &mut SplitMix64, shape: &[usize], fan_in: usize) -> Result<Tensor<T>> {
    if fan_in == 0 {
        return Err(Error::InvalidConfig("he_init: fan_in must be at least 1".into()));
    }
    let len = checked_len(shape)?;
    let std = (2.0 / fan_in as f64).sqrt();
    let mut data = Vec::with_capacity(len);
    while data.len() < len {
        let (a, b) = rng.normal_pair();
        data.push(T::from_f64_lossy(a * std));
        if data.len() < len {
            data.push(T::from_f64_lossy(b * std));
        }
    }
    Tensor::from_vec(shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference SplitMix64 written against the counter form of the
    /// generator, independent of the incremental state update above.
    fn reference_splitmix(seed: u64, index: u64) -> u64 {
        let gamma = 0x9E37_79B9_7F4A_7C15u128;
        let mut z = ((seed as u128 + (index as u128 + 1) * gamma) & u64::MAX as u128) as u64;
        z = ((z ^ (z >> 30)) as u128 * 0xBF58_476D_1CE4_E5B9u128) as u64;
        z = ((z ^ (z >> 27)) as u128 * 0x94D0_49BB_1331_11EBu128) as u64;
        z ^ (z >> 31)
    }

    #[test]
    fn new_fills_and_validates() {
        let t = Tensor::<f32>::new(&[2, 2], 0.0).unwrap();
        assert_eq!(t.data(), &[0.0; 4]);
        let t = Tensor::<f32>::new(&[1, 3, 5, 5], 1.0).unwrap();
        assert_eq!(t.len(), 75);
        assert!(t.data().iter().all(|&v| v == 1.0));
        assert!(matches!(
            Tensor::<f32>::new(&[3, 0], 1.0),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            Tensor::<f32>::new(&[], 1.0),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn from_vec_rejects_length_mismatch() {
        assert!(Tensor::<f64>::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn splitmix_seed_zero_reference_outputs() {
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        for seed in [0u64, 1, 42, u64::MAX, 0xDEAD_BEEF] {
            let mut rng = SplitMix64::new(seed);
            for i in 0..1000 {
                assert_eq!(rng.next_u64(), reference_splitmix(seed, i));
            }
        }
    }

    #[test]
    fn splitmix_streams_are_reproducible() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn uniform_first_draw_and_range() {
        let mut rng = SplitMix64::new(0);
        let u = rng.uniform();
        let expected = (0xE220_A839_7B1D_CDAFu64 >> 11) as f64 / 9_007_199_254_740_992.0;
        assert_eq!(u, expected);
        assert!((u - 0.8832).abs() < 2e-4, "{u}");

        let mut rng = SplitMix64::new(12345);
        let draws: Vec<f64> = (0..10_000).map(|_| rng.uniform()).collect();
        assert!(draws.iter().all(|&u| (0.0..1.0).contains(&u)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() <= 0.02, "mean {mean}");
    }

    #[test]
    fn he_init_statistics_and_determinism() {
        let mut rng = SplitMix64::new(2024);
        let t: Tensor<f64> = he_init(&mut rng, &[10_000], 2).unwrap();
        let n = t.len() as f64;
        let mean = t.sum() / n;
        let var = t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() <= 0.05, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() <= 0.05, "std {}", var.sqrt());

        let again: Tensor<f64> = he_init(&mut SplitMix64::new(2024), &[10_000], 2).unwrap();
        assert_eq!(t, again);
        assert!(he_init::<f32>(&mut SplitMix64::new(1), &[3], 0).is_err());
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<usize> = (0..50).collect();
        SplitMix64::new(3).shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
