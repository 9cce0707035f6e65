use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

pub fn relu<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| v.max(T::zero()))
}

/// Passes gradient where the input was strictly positive; the subgradient at
/// exactly zero is taken as zero.
pub fn relu_backward<T: Real>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if input.shape() != grad_out.shape() {
        return Err(Error::shape(format!(
            "relu_backward: input {:?} vs grad {:?}",
            input.shape(),
            grad_out.shape()
        )));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(input.shape(), data)
}
