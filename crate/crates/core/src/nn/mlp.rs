//! Dense feed-forward network with hand-written backpropagation.
//!
//! All parameters live in one flat vector, layer by layer: the weight
//! matrix (row-major, `outputs × inputs`) followed by the bias vector. The
//! optimizer and the gradient checker work on that vector directly.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    /// Used to test against closed-form linear gradients.
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One training or evaluation pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths, input first; the last entry is 1.
    pub dims: Vec<usize>,
    pub activation: Activation,
    /// Drop probability applied to each hidden layer's output.
    pub dropout: Vec<f64>,
    /// The network returns `output_scale · (w·h + b)`.
    pub output_scale: f64,
    pub params: Vec<f64>,
}

struct Trace {
    /// `activations[0]` is the input; `activations[l]` the (masked) output of
    /// hidden layer `l`.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
    output: f64,
}

impl Mlp {
    pub fn zeros(dims: &[usize], activation: Activation) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid("dims", "need at least an input and an output layer, all non-empty"));
        }
        if dims[dims.len() - 1] != 1 {
            return Err(Error::invalid("dims", "output layer must have width 1"));
        }
        let count = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Mlp {
            dims: dims.to_vec(),
            activation,
            dropout: vec![0.0; dims.len() - 2],
            output_scale: 1.0,
            params: vec![0.0; count],
        })
    }

    /// He-normal weights, zero biases. With `zero_output` the last layer is
    /// zeroed so the network starts out predicting exactly 0.
    pub fn he_init<R: Rng + ?Sized>(dims: &[usize], activation: Activation, zero_output: bool, rng: &mut R) -> Result<Self> {
        let mut mlp = Self::zeros(dims, activation)?;
        let n_layers = mlp.n_layers();
        for layer in 0..n_layers {
            if zero_output && layer + 1 == n_layers {
                continue;
            }
            let fan_in = mlp.dims[layer];
            let normal = Normal::new(0.0, libm::sqrt(2.0 / fan_in as f64)).map_err(|_| Error::invalid("dims", "bad fan-in"))?;
            let (w, _) = mlp.layer_range(layer);
            for p in &mut mlp.params[w] {
                *p = normal.sample(rng);
            }
        }
        Ok(mlp)
    }

    pub fn with_dropout(mut self, dropout: Vec<f64>) -> Result<Self> {
        if dropout.len() != self.dims.len() - 2 || dropout.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(Error::invalid("dropout", "one rate in [0, 1) per hidden layer"));
        }
        self.dropout = dropout;
        Ok(self)
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// `(weights, biases)` index ranges of `layer` in [`Mlp::params`].
    pub fn layer_range(&self, layer: usize) -> (core::ops::Range<usize>, core::ops::Range<usize>) {
        let offset: usize = self.dims.windows(2).take(layer).map(|w| w[0] * w[1] + w[1]).sum();
        let (fan_in, fan_out) = (self.dims[layer], self.dims[layer + 1]);
        let w_end = offset + fan_in * fan_out;
        (offset..w_end, w_end..w_end + fan_out)
    }

    /// True for weight entries, false for biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for layer in 0..self.n_layers() {
            let (w, _) = self.layer_range(layer);
            mask[w].iter_mut().for_each(|m| *m = true);
        }
        mask
    }

    /// Σ w² over weights only.
    pub fn weight_norm_sq(&self) -> f64 {
        (0..self.n_layers()).map(|l| self.params[self.layer_range(l).0].iter().map(|w| w * w).sum::<f64>()).sum()
    }

    fn trace<R: Rng + ?Sized>(&self, x: &[f64], mut dropout_rng: Option<&mut R>) -> Trace {
        let n_layers = self.n_layers();
        let mut activations = Vec::with_capacity(n_layers);
        let mut pre = Vec::with_capacity(n_layers);
        let mut masks = Vec::with_capacity(n_layers - 1);
        activations.push(x.to_vec());

        for layer in 0..n_layers {
            let (w, b) = self.layer_range(layer);
            let (weights, bias) = (&self.params[w], &self.params[b]);
            let input = &activations[layer];
            let fan_in = self.dims[layer];
            let z: Vec<f64> = bias
                .iter()
                .enumerate()
                .map(|(o, b)| b + weights[o * fan_in..(o + 1) * fan_in].iter().zip(input).map(|(w, a)| w * a).sum::<f64>())
                .collect();

            if layer + 1 == n_layers {
                let output = self.output_scale * z[0];
                pre.push(z);
                return Trace { activations, pre, masks, output };
            }

            let rate = self.dropout[layer];
            let mask: Vec<f64> = match dropout_rng.as_deref_mut() {
                Some(rng) if rate > 0.0 => {
                    let keep = 1.0 - rate;
                    z.iter().map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect()
                }
                _ => vec![1.0; z.len()],
            };
            let a = z.iter().zip(&mask).map(|(&z, m)| self.activation.apply(z) * m).collect();
            pre.push(z);
            masks.push(mask);
            activations.push(a);
        }
        unreachable!("network has at least one layer")
    }

    /// Inference: no dropout.
    pub fn forward(&self, x: &[f64]) -> f64 {
        self.trace::<SeededRng>(x, None).output
    }

    /// Training-mode forward pass with inverted dropout.
    pub fn forward_train<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> f64 {
        self.trace(x, Some(rng)).output
    }

    /// Accumulates `d_output · ∂output/∂θ` into `grads`.
    fn backward(&self, trace: &Trace, d_output: f64, grads: &mut [f64]) {
        let n_layers = self.n_layers();
        let mut delta = vec![d_output * self.output_scale];
        for layer in (0..n_layers).rev() {
            let (w, b) = self.layer_range(layer);
            let fan_in = self.dims[layer];
            let input = &trace.activations[layer];
            for (o, d) in delta.iter().enumerate() {
                grads[b.start + o] += d;
                let row = &mut grads[w.start + o * fan_in..w.start + (o + 1) * fan_in];
                row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
            }
            if layer == 0 {
                break;
            }
            let weights = &self.params[w];
            let below = layer - 1;
            delta = (0..fan_in)
                .map(|i| {
                    let back: f64 = delta.iter().enumerate().map(|(o, d)| d * weights[o * fan_in + i]).sum();
                    back * trace.masks[below][i] * self.activation.derivative(trace.pre[below][i])
                })
                .collect();
        }
    }

    /// Mean squared error plus `l2 · Σ w²`.
    pub fn loss(&self, examples: &[Example], l2: f64) -> f64 {
        mse(self, examples) + l2 * self.weight_norm_sq()
    }

    /// Loss and its gradient. Dropout is active only when `dropout_rng` is
    /// given.
    pub fn loss_and_gradient<R: Rng + ?Sized>(
        &self,
        examples: &[Example],
        l2: f64,
        mut dropout_rng: Option<&mut R>,
    ) -> (f64, Vec<f64>) {
        let n = examples.len() as f64;
        let mut grads = vec![0.0; self.params.len()];
        let mut sq = 0.0;
        for ex in examples {
            let trace = self.trace(&ex.x, dropout_rng.as_deref_mut());
            let err = trace.output - ex.y;
            sq += err * err;
            self.backward(&trace, 2.0 * err / n, &mut grads);
        }
        for layer in 0..self.n_layers() {
            let (w, _) = self.layer_range(layer);
            for i in w {
                grads[i] += 2.0 * l2 * self.params[i];
            }
        }
        (sq / n + l2 * self.weight_norm_sq(), grads)
    }

    pub fn gradient(&self, examples: &[Example], l2: f64) -> Vec<f64> {
        self.loss_and_gradient::<SeededRng>(examples, l2, None).1
    }
}

/// Mean squared error, inference mode.
pub fn mse(mlp: &Mlp, examples: &[Example]) -> f64 {
    let n = examples.len() as f64;
    examples
        .iter()
        .map(|ex| {
            let err = mlp.forward(&ex.x) - ex.y;
            err * err
        })
        .sum::<f64>()
        / n
}
