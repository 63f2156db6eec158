use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use super::{silu, silu_grad};
use crate::error::{check_len, Error, Result};
use crate::math::sqrt;
use crate::rng::Prng;

/// Hands out a fresh stamp every time some network's parameters may change,
/// so a trace can tell whether it still describes the parameters it was
/// recorded against.
static STAMPS: AtomicU64 = AtomicU64::new(1);

fn fresh_stamp() -> u64 {
    STAMPS.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Silu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Silu => silu(x),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Silu => silu_grad(x),
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected feed-forward network.
///
/// Hidden layers use `hidden_activation`; the output layer is affine.
/// Parameters are stored flat, layer after layer, each layer as its weight
/// matrix (`out x in`, row-major) followed by its bias vector. Gradient
/// buffers use the same layout.
#[derive(Debug, Clone)]
pub struct Mlp {
    dims: Vec<usize>,
    hidden_activation: Activation,
    params: Vec<f64>,
    offsets: Vec<usize>,
    stamp: u64,
}

/// Values recorded by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    stamp: u64,
    /// Input of every layer (the network input, then post-activations).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of every hidden layer.
    pre: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidArgument("an MLP needs at least two layer dims"));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidArgument("layer dims must be positive"));
    }
    Ok(())
}

impl Mlp {
    /// Number of scalars in a network with these layer dims.
    pub fn param_count_for(dims: &[usize]) -> usize {
        dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// All parameters zero.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        validate_dims(dims)?;
        let mut offsets = Vec::with_capacity(dims.len());
        let mut at = 0;
        for w in dims.windows(2) {
            offsets.push(at);
            at += w[1] * w[0] + w[1];
        }
        offsets.push(at);
        Ok(Mlp {
            dims: dims.to_vec(),
            hidden_activation: Activation::Silu,
            params: vec![0.0; at],
            offsets,
            stamp: fresh_stamp(),
        })
    }

    /// Weights uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    ///
    /// Consumes exactly one `rng.uniform()` per weight, layer by layer in
    /// row-major order; biases draw nothing.
    pub fn init(dims: &[usize], rng: &mut Prng) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        for layer in 0..mlp.num_layers() {
            let bound = sqrt(1.0 / mlp.dims[layer] as f64);
            for w in mlp.weights_mut(layer) {
                *w = bound * (2.0 * rng.uniform() - 1.0);
            }
        }
        Ok(mlp)
    }

    /// Rebuilds a network from per-layer weights (row-major) and biases.
    pub fn from_layers(dims: &[usize], weights: &[Vec<f64>], biases: &[Vec<f64>]) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        let layers = mlp.num_layers();
        check_len("layer weights", layers, weights.len())?;
        check_len("layer biases", layers, biases.len())?;
        for layer in 0..layers {
            let (n_in, n_out) = (dims[layer], dims[layer + 1]);
            check_len("weight matrix", n_in * n_out, weights[layer].len())?;
            check_len("bias vector", n_out, biases[layer].len())?;
            mlp.weights_mut(layer).copy_from_slice(&weights[layer]);
            mlp.biases_mut(layer).copy_from_slice(&biases[layer]);
        }
        Ok(mlp)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access invalidates outstanding traces.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.stamp = fresh_stamp();
        &mut self.params
    }

    fn layer_range(&self, layer: usize) -> (usize, usize, usize) {
        let start = self.offsets[layer];
        let n_w = self.dims[layer] * self.dims[layer + 1];
        (start, start + n_w, self.offsets[layer + 1])
    }

    /// Weight matrix of `layer`, `out x in`, row-major.
    pub fn weights(&self, layer: usize) -> &[f64] {
        let (a, b, _) = self.layer_range(layer);
        &self.params[a..b]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        let (_, b, c) = self.layer_range(layer);
        &self.params[b..c]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let (a, b, _) = self.layer_range(layer);
        &mut self.params_mut()[a..b]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        let (_, b, c) = self.layer_range(layer);
        &mut self.params_mut()[b..c]
    }

    fn affine(&self, layer: usize, input: &[f64], out: &mut [f64]) {
        let n_in = self.dims[layer];
        let w = self.weights(layer);
        let b = self.biases(layer);
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(input) {
                acc += wi * xi;
            }
            *slot = acc;
        }
    }

    /// Evaluates the network without recording anything.
    pub fn eval(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_len("MLP input", self.input_dim(), input.len())?;
        let mut current = input.to_vec();
        for layer in 0..self.num_layers() {
            let mut out = vec![0.0; self.dims[layer + 1]];
            self.affine(layer, &current, &mut out);
            if layer + 1 < self.num_layers() {
                for v in &mut out {
                    *v = self.hidden_activation.apply(*v);
                }
            }
            current = out;
        }
        Ok(current)
    }

    /// Evaluates the network and records what [`Mlp::backward`] needs.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, MlpTrace)> {
        check_len("MLP input", self.input_dim(), input.len())?;
        let layers = self.num_layers();
        let mut inputs = Vec::with_capacity(layers);
        let mut pre = Vec::with_capacity(layers - 1);
        let mut current = input.to_vec();
        for layer in 0..layers {
            let mut out = vec![0.0; self.dims[layer + 1]];
            self.affine(layer, &current, &mut out);
            inputs.push(current);
            if layer + 1 < layers {
                let post = out.iter().map(|&z| self.hidden_activation.apply(z)).collect();
                pre.push(out);
                current = post;
            } else {
                current = out;
            }
        }
        let trace = MlpTrace {
            stamp: self.stamp,
            inputs,
            pre,
        };
        Ok((current, trace))
    }

    /// Reverse pass for `<grad_output, f(x)>`: adds the parameter gradient
    /// into `param_grads` (same layout as [`Mlp::params`]) and returns the
    /// gradient with respect to the input.
    pub fn backward_into(&self, trace: &MlpTrace, grad_output: &[f64], param_grads: &mut [f64]) -> Result<Vec<f64>> {
        if trace.stamp != self.stamp || trace.inputs.len() != self.num_layers() {
            return Err(Error::StaleTrace);
        }
        check_len("MLP output gradient", self.output_dim(), grad_output.len())?;
        check_len("MLP parameter gradient", self.num_params(), param_grads.len())?;
        let mut delta = grad_output.to_vec();
        for layer in (0..self.num_layers()).rev() {
            let n_in = self.dims[layer];
            let input = &trace.inputs[layer];
            let (w_start, b_start, end) = self.layer_range(layer);
            let w = self.weights(layer);
            {
                let (gw, gb) = param_grads[w_start..end].split_at_mut(b_start - w_start);
                for (o, &d) in delta.iter().enumerate() {
                    gb[o] += d;
                    if d != 0.0 {
                        for (g, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                            *g += d * xi;
                        }
                    }
                }
            }
            let mut down = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (g, wi) in down.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *g += d * wi;
                    }
                }
            }
            if layer > 0 {
                for (g, &z) in down.iter_mut().zip(&trace.pre[layer - 1]) {
                    *g *= self.hidden_activation.derivative(z);
                }
            }
            delta = down;
        }
        Ok(delta)
    }

    pub fn backward(&self, trace: &MlpTrace, grad_output: &[f64]) -> Result<MlpGradients> {
        let mut params = vec![0.0; self.num_params()];
        let input = self.backward_into(trace, grad_output, &mut params)?;
        Ok(MlpGradients { params, input })
    }
}
