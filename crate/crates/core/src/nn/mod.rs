//! Feedforward network controller: forward pass, reverse-mode Jacobian,
//! min-max normalization, Levenberg–Marquardt training and a plain-text
//! weights format.
//!
//! Parameters are flattened layer by layer; within a layer the weight matrix
//! comes first in row-major order, followed by the bias vector. Both the
//! Jacobian columns and the weights file use this order.

mod check;
mod io;
mod normalize;
mod train;

pub use check::{finite_difference_jacobian, gradcheck, relative_error, GradCheck};
pub use io::{
    format_normalizer, format_weights, load_normalizer, load_weights, parse_normalizer,
    parse_weights, save_normalizer, save_weights, WeightsError,
};
pub use normalize::{MinMax, Normalizer, Split, TrainingSet};
pub use train::{
    evaluate_regression, lm_step, regression_stats, train_lm, LmOptions, Regression, StopReason,
    TrainError, TrainReport,
};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("network needs at least an input and an output layer, got sizes {0:?}")]
    TooFewLayers(Vec<usize>),
    #[error("layer sizes must be positive, got {0:?}")]
    EmptyLayer(Vec<usize>),
    #[error("expected input of length {expected}, got {found}")]
    InputShape { expected: usize, found: usize },
    #[error("expected {expected} parameters, got {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("parameter {index} is not finite ({value})")]
    NonFiniteParameter { index: usize, value: f64 },
    #[error("input is not finite")]
    NonFiniteInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn slope(self, out: f64) -> f64 {
        match self {
            Activation::Sigmoid => out * (1.0 - out),
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    sizes: Vec<usize>,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    hidden: Activation,
    output: Activation,
}

/// Per-layer activations kept from a forward pass, input included.
struct Tape {
    activations: Vec<Vec<f64>>,
}

impl Network {
    /// All-zero network with the given layer sizes.
    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::TooFewLayers(sizes.to_vec()));
        }
        if sizes.contains(&0) {
            return Err(NnError::EmptyLayer(sizes.to_vec()));
        }
        let weights = sizes
            .windows(2)
            .map(|w| DMatrix::zeros(w[1], w[0]))
            .collect();
        let biases = sizes[1..].iter().map(|&n| DVector::zeros(n)).collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
            hidden,
            output,
        })
    }

    /// Parameters drawn uniformly from [-0.5, 0.5] in flattening order.
    pub fn seeded(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        seed: u64,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes, hidden, output)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..net.param_count())
            .map(|_| rng.gen_range(-0.5..=0.5))
            .collect();
        net.set_params(&params)?;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for i in 0..w.nrows() {
                out.extend(w.row(i).iter());
            }
            out.extend(b.iter());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NnError> {
        let expected = self.param_count();
        if params.len() != expected {
            return Err(NnError::ParameterCount {
                expected,
                found: params.len(),
            });
        }
        if let Some((index, &value)) = params.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(NnError::NonFiniteParameter { index, value });
        }
        let mut it = params.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    w[(i, j)] = it.next().unwrap();
                }
            }
            for v in b.iter_mut() {
                *v = it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self, NnError> {
        let mut net = self.clone();
        net.set_params(params)?;
        Ok(net)
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.weights.len() {
            self.output
        } else {
            self.hidden
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::InputShape {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteInput);
        }
        Ok(())
    }

    fn tape(&self, x: &[f64]) -> Tape {
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(x.to_vec());
        for (layer, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let act = self.activation_of(layer);
            let input = activations.last().unwrap();
            let out = (0..w.nrows())
                .map(|i| {
                    let z = (0..w.ncols()).fold(b[i], |acc, j| acc + w[(i, j)] * input[j]);
                    act.apply(z)
                })
                .collect();
            activations.push(out);
        }
        Tape { activations }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(x)?;
        Ok(self.tape(x).activations.pop().unwrap())
    }

    /// Single-input, single-output evaluation.
    pub fn eval_scalar(&self, x: f64) -> Result<f64, NnError> {
        Ok(self.forward(&[x])?[0])
    }

    /// Writes ∂output[o]/∂params into `row` by reverse accumulation.
    fn backprop_row(&self, tape: &Tape, o: usize, row: &mut [f64]) {
        let layers = self.weights.len();
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for w in &self.weights {
            offsets.push(offset);
            offset += w.nrows() * w.ncols() + w.nrows();
        }

        let last = &tape.activations[layers];
        let mut delta: Vec<f64> = (0..last.len())
            .map(|i| {
                if i == o {
                    self.output.slope(last[i])
                } else {
                    0.0
                }
            })
            .collect();

        for layer in (0..layers).rev() {
            let w = &self.weights[layer];
            let input = &tape.activations[layer];
            let base = offsets[layer];
            let (rows, cols) = (w.nrows(), w.ncols());
            for i in 0..rows {
                for j in 0..cols {
                    row[base + i * cols + j] = delta[i] * input[j];
                }
                row[base + rows * cols + i] = delta[i];
            }
            if layer > 0 {
                let act = self.activation_of(layer - 1);
                delta = (0..cols)
                    .map(|j| {
                        let back = (0..rows).fold(0.0, |acc, i| acc + w[(i, j)] * delta[i]);
                        back * act.slope(input[j])
                    })
                    .collect();
            }
        }
    }

    /// Jacobian of the outputs with respect to the flattened parameters,
    /// one row per output.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, NnError> {
        self.check_input(x)?;
        let tape = self.tape(x);
        let p = self.param_count();
        let mut jac = DMatrix::zeros(self.output_dim(), p);
        let mut row = vec![0.0; p];
        for o in 0..self.output_dim() {
            self.backprop_row(&tape, o, &mut row);
            for (k, v) in row.iter().enumerate() {
                jac[(o, k)] = *v;
            }
        }
        Ok(jac)
    }

    /// Output and parameter gradient of a single-output network in one pass.
    pub(crate) fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let tape = self.tape(x);
        self.backprop_row(&tape, 0, grad);
        tape.activations.last().unwrap()[0]
    }
}
