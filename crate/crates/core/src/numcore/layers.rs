use rand::Rng as _;

use super::matrix::Matrix;
use crate::error::{shape_err, Result};
use crate::rng::Rng;

/// Affine layer `y = W·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(shape_err!(
                "bias of length {} for {}x{} weight",
                bias.len(),
                weight.rows(),
                weight.cols()
            ));
        }
        Ok(DenseLayer { weight, bias })
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        DenseLayer {
            weight: Matrix::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }

    /// Uniform init in `±1/sqrt(in_dim)`, zero bias.
    pub fn random(out_dim: usize, in_dim: usize, rng: &mut Rng) -> Self {
        let mut layer = DenseLayer::zeros(out_dim, in_dim);
        fill_uniform(layer.weight.data_mut(), in_dim, rng);
        layer
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.weight.matvec(x)?;
        for (v, b) in y.iter_mut().zip(&self.bias) {
            *v += b;
        }
        Ok(y)
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.bias.clone();
        self.weight.matvec_acc(x, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grads` and, when requested,
    /// the input gradient into `grad_in`.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        grad_out: &[f64],
        grads: &mut DenseLayer,
        grad_in: Option<&mut [f64]>,
    ) {
        grads.weight.add_outer(grad_out, x);
        for (b, g) in grads.bias.iter_mut().zip(grad_out) {
            *b += g;
        }
        if let Some(gi) = grad_in {
            self.weight.matvec_t_acc(grad_out, gi);
        }
    }

    pub fn tensors(&self) -> [&[f64]; 2] {
        [self.weight.data(), &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weight.data_mut(), &mut self.bias]
    }

    pub fn zeros_like(&self) -> Self {
        DenseLayer::zeros(self.out_dim(), self.in_dim())
    }
}

/// Elman cell: `h_t = tanh(W·x_t + U·h_{t-1} + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentLayer {
    pub input_weight: Matrix,
    pub recurrent_weight: Matrix,
    pub bias: Vec<f64>,
}

impl RecurrentLayer {
    pub fn new(input_weight: Matrix, recurrent_weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        let h = recurrent_weight.rows();
        if recurrent_weight.cols() != h {
            return Err(shape_err!(
                "recurrent weight must be square, got {}x{}",
                h,
                recurrent_weight.cols()
            ));
        }
        if input_weight.rows() != h || bias.len() != h {
            return Err(shape_err!(
                "input weight {}x{} / bias {} inconsistent with hidden dim {h}",
                input_weight.rows(),
                input_weight.cols(),
                bias.len()
            ));
        }
        Ok(RecurrentLayer {
            input_weight,
            recurrent_weight,
            bias,
        })
    }

    pub fn zeros(hidden_dim: usize, input_dim: usize) -> Self {
        RecurrentLayer {
            input_weight: Matrix::zeros(hidden_dim, input_dim),
            recurrent_weight: Matrix::zeros(hidden_dim, hidden_dim),
            bias: vec![0.0; hidden_dim],
        }
    }

    pub fn random(hidden_dim: usize, input_dim: usize, rng: &mut Rng) -> Self {
        let mut layer = RecurrentLayer::zeros(hidden_dim, input_dim);
        fill_uniform(layer.input_weight.data_mut(), input_dim, rng);
        fill_uniform(layer.recurrent_weight.data_mut(), hidden_dim, rng);
        layer
    }

    pub fn hidden_dim(&self) -> usize {
        self.recurrent_weight.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.input_weight.cols()
    }

    pub(crate) fn step(&self, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        let mut a = self.bias.clone();
        self.input_weight.matvec_acc(x, &mut a);
        self.recurrent_weight.matvec_acc(h_prev, &mut a);
        a.iter_mut().for_each(|v| *v = v.tanh());
        a
    }

    pub fn forward(&self, seq: &[Vec<f64>], h0: &[f64]) -> Result<Vec<Vec<f64>>> {
        if h0.len() != self.hidden_dim() {
            return Err(shape_err!(
                "initial state of length {} for hidden dim {}",
                h0.len(),
                self.hidden_dim()
            ));
        }
        if let Some((i, x)) = seq.iter().enumerate().find(|(_, x)| x.len() != self.input_dim()) {
            return Err(shape_err!(
                "frame {i} has dim {}, layer expects {}",
                x.len(),
                self.input_dim()
            ));
        }
        Ok(self.forward_unchecked(seq, h0))
    }

    pub(crate) fn forward_unchecked(&self, seq: &[Vec<f64>], h0: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(seq.len());
        for x in seq {
            let h = self.step(x, out.last().map_or(h0, |v| v.as_slice()));
            out.push(h);
        }
        out
    }

    /// Backpropagation through time. Accumulates parameter gradients into
    /// `grads` and returns the gradient with respect to each input frame.
    pub(crate) fn backward(
        &self,
        inputs: &[Vec<f64>],
        h0: &[f64],
        outputs: &[Vec<f64>],
        grad_outputs: &[Vec<f64>],
        grads: &mut RecurrentLayer,
        want_input_grads: bool,
    ) -> Vec<Vec<f64>> {
        let hd = self.hidden_dim();
        let n = inputs.len();
        let mut grad_inputs = if want_input_grads {
            vec![vec![0.0; self.input_dim()]; n]
        } else {
            Vec::new()
        };
        let mut carry = vec![0.0; hd];
        let mut da = vec![0.0; hd];
        for t in (0..n).rev() {
            let h = &outputs[t];
            for i in 0..hd {
                da[i] = (grad_outputs[t][i] + carry[i]) * (1.0 - h[i] * h[i]);
            }
            let h_prev = if t == 0 { h0 } else { &outputs[t - 1] };
            grads.input_weight.add_outer(&da, &inputs[t]);
            grads.recurrent_weight.add_outer(&da, h_prev);
            for (b, g) in grads.bias.iter_mut().zip(&da) {
                *b += g;
            }
            if want_input_grads {
                self.input_weight.matvec_t_acc(&da, &mut grad_inputs[t]);
            }
            carry.iter_mut().for_each(|v| *v = 0.0);
            self.recurrent_weight.matvec_t_acc(&da, &mut carry);
        }
        grad_inputs
    }

    pub fn tensors(&self) -> [&[f64]; 3] {
        [
            self.input_weight.data(),
            self.recurrent_weight.data(),
            &self.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 3] {
        [
            self.input_weight.data_mut(),
            self.recurrent_weight.data_mut(),
            &mut self.bias,
        ]
    }

    pub fn zeros_like(&self) -> Self {
        RecurrentLayer::zeros(self.hidden_dim(), self.input_dim())
    }
}

fn fill_uniform(data: &mut [f64], fan_in: usize, rng: &mut Rng) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    for v in data {
        *v = rng.random_range(-bound..bound);
    }
}
