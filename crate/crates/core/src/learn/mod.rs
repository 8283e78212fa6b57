//! Tensors, reverse-mode gradients and Adam.

mod adam;
mod tape;
mod tensor;

pub use adam::AdamState;
pub use tape::{Grads, Tape, Var};
pub use tensor::Tensor;

use rand::Rng as _;

use crate::real::Real;

/// Glorot-uniform `rows x cols` weights.
pub fn glorot<F: Real>(rows: usize, cols: usize, rng: &mut crate::rng::Rng) -> Tensor<F> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_fn(rows, cols, |_, _| F::lit(rng.random_range(-limit..=limit)))
}
