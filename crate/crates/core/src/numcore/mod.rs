//! Minimal dense numerics: matrices, dense and Elman layers, softmax-family
//! ops, losses, finite-difference checking and SGD.

mod layers;
mod matrix;
mod ops;
mod optim;

pub use layers::{DenseLayer, RecurrentLayer};
pub use matrix::{dot, Matrix, MATRIX_MAGIC};
pub use ops::{
    bce_loss, cross_entropy_loss, finite_diff_gradient, log_sum_exp, sigmoid, softmax, FD_EPS,
    PROB_EPS,
};
pub(crate) use ops::{log_softmax_unchecked, lse2, softmax_unchecked};
pub use optim::{sgd_step, sgd_step_in_place};

/// `h_t = tanh(W·x_t + U·h_{t-1} + b)` over a whole sequence.
pub fn recurrent_forward(
    seq: &[Vec<f64>],
    layer: &RecurrentLayer,
    h0: &[f64],
) -> crate::Result<Vec<Vec<f64>>> {
    layer.forward(seq, h0)
}

/// `y = W·x + b`.
pub fn dense_forward(x: &[f64], layer: &DenseLayer) -> crate::Result<Vec<f64>> {
    layer.forward(x)
}
