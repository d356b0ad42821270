use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::featurize::SparseVec;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_C: f64 = 0.044_715;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Gelu,
    Relu,
}

impl Activation {
    /// GELU uses the tanh approximation.
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Gelu => 0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + GELU_C * x * x * x)).tanh()),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gelu => {
                let u = SQRT_2_OVER_PI * (x + GELU_C * x * x * x);
                let t = u.tanh();
                let du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_C * x * x);
                0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    /// Output sizes of each layer; the last must be 1.
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    pub dropout: f64,
    pub l2: f64,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, layer_dims: &[usize], activation: Activation, dropout: f64, l2: f64) -> Self {
        NetworkSpec { input_dim, layer_dims: layer_dims.to_vec(), activation, dropout, l2 }
    }

    pub fn site_classifier() -> Self {
        Self::new(800, &[512, 256, 1], Activation::Gelu, 0.0, 5e-5)
    }

    pub fn drfp_ranker() -> Self {
        Self::new(2048, &[400, 200, 1], Activation::Gelu, 0.5, 0.0)
    }

    pub fn predefined_ranker() -> Self {
        Self::new(3200, &[512, 256, 1], Activation::Gelu, 0.5, 0.0)
    }

    pub fn contrastive_branch() -> Self {
        Self::new(140, &[128, 64, 1], Activation::Gelu, 0.5, 0.0)
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |why: &str| Err(NeuralError::InvalidSpec(why.to_string()));
        if self.input_dim == 0 || self.layer_dims.iter().any(|&d| d == 0) {
            return bad("dimensions must be positive");
        }
        if self.layer_dims.last() != Some(&1) {
            return bad("final layer must have one output");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return bad("l2 must be non-negative");
        }
        Ok(())
    }
}

/// Dense layer with weights stored input-major: `w[i * out_dim + o]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer { in_dim, out_dim, w: vec![0.0; in_dim * out_dim], b: vec![0.0; out_dim] }
    }

    fn forward_dense(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.b.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = &self.w[i * self.out_dim..(i + 1) * self.out_dim];
                for (zo, &w) in z.iter_mut().zip(row) {
                    *zo += xi * w;
                }
            }
        }
        z
    }

    fn forward_sparse(&self, x: &SparseVec) -> Vec<f64> {
        let mut z = self.b.clone();
        for (i, xi) in x.iter() {
            let row = &self.w[i * self.out_dim..(i + 1) * self.out_dim];
            for (zo, &w) in z.iter_mut().zip(row) {
                *zo += xi * w;
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: NetworkSpec,
    pub layers: Vec<Layer>,
}

/// Gradients with the same shapes as an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<Layer>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Grads { layers: net.layers.iter().map(|l| Layer::zeros(l.in_dim, l.out_dim)).collect() }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|g| *g *= k);
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b)).map(|g| g * g).sum()
    }

    /// Adds the gradient of `l2 * sum(w^2)` over weights (not biases).
    pub fn add_l2(&mut self, net: &Mlp, l2: f64) {
        if l2 == 0.0 {
            return;
        }
        for (g, l) in self.layers.iter_mut().zip(&net.layers) {
            for (gw, w) in g.w.iter_mut().zip(&l.w) {
                *gw += 2.0 * l2 * w;
            }
        }
    }
}

/// Intermediate values of one training-mode forward pass.
#[derive(Debug, Clone)]
pub struct Trace<'a> {
    input: &'a SparseVec,
    /// Pre-activations of hidden layers.
    pre: Vec<Vec<f64>>,
    /// Hidden outputs after activation and dropout.
    hidden: Vec<Vec<f64>>,
    /// Dropout multipliers (0 or 1/(1-p)).
    masks: Vec<Vec<f64>>,
    pub output: f64,
}

impl Mlp {
    pub fn zeros(spec: NetworkSpec) -> Result<Self, NeuralError> {
        spec.validate()?;
        let mut layers = Vec::new();
        let mut prev = spec.input_dim;
        for &d in &spec.layer_dims {
            layers.push(Layer::zeros(prev, d));
            prev = d;
        }
        Ok(Mlp { spec, layers })
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self, NeuralError> {
        let mut net = Self::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &mut net.layers {
            let bound = 1.0 / (l.in_dim as f64).sqrt();
            l.w.iter_mut().for_each(|w| *w = rng.gen_range(-bound..bound));
        }
        Ok(net)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn l2_penalty(&self) -> f64 {
        self.spec.l2 * self.layers.iter().flat_map(|l| &l.w).map(|w| w * w).sum::<f64>()
    }

    fn check(&self, x: &SparseVec) -> Result<(), NeuralError> {
        if x.dim != self.spec.input_dim {
            return Err(NeuralError::Dimension { expected: self.spec.input_dim, found: x.dim });
        }
        Ok(())
    }

    /// Inference: no dropout.
    pub fn forward(&self, x: &SparseVec) -> Result<f64, NeuralError> {
        self.check(x)?;
        let act = self.spec.activation;
        let mut h = self.layers[0].forward_sparse(x);
        for layer in &self.layers[1..] {
            h.iter_mut().for_each(|v| *v = act.apply(*v));
            h = layer.forward_dense(&h);
        }
        Ok(h[0])
    }

    /// Forward pass keeping what backpropagation needs. Dropout masks are
    /// drawn from `rng` when `train` is set.
    pub fn forward_trace<'a, R: Rng>(
        &self,
        x: &'a SparseVec,
        train: bool,
        rng: &mut R,
    ) -> Result<Trace<'a>, NeuralError> {
        self.check(x)?;
        let act = self.spec.activation;
        let p = if train { self.spec.dropout } else { 0.0 };
        let keep = 1.0 / (1.0 - p);
        let mut trace = Trace { input: x, pre: Vec::new(), hidden: Vec::new(), masks: Vec::new(), output: 0.0 };
        let mut z = self.layers[0].forward_sparse(x);
        for layer in &self.layers[1..] {
            let mask: Vec<f64> = (0..z.len())
                .map(|_| if p > 0.0 && rng.gen::<f64>() < p { 0.0 } else { keep })
                .collect();
            let h: Vec<f64> = z.iter().zip(&mask).map(|(&v, &m)| act.apply(v) * m).collect();
            let next = layer.forward_dense(&h);
            trace.pre.push(z);
            trace.hidden.push(h);
            trace.masks.push(mask);
            z = next;
        }
        trace.output = z[0];
        Ok(trace)
    }

    /// Accumulates `dout * d(output)/d(params)` into `grads`.
    pub fn backward(&self, trace: &Trace<'_>, dout: f64, grads: &mut Grads) {
        let act = self.spec.activation;
        let mut dz = vec![dout];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            for (gb, &d) in g.b.iter_mut().zip(&dz) {
                *gb += d;
            }
            if l == 0 {
                for (i, xi) in trace.input.iter() {
                    let row = &mut g.w[i * layer.out_dim..(i + 1) * layer.out_dim];
                    for (gw, &d) in row.iter_mut().zip(&dz) {
                        *gw += xi * d;
                    }
                }
                break;
            }
            let h = &trace.hidden[l - 1];
            let mut dh = vec![0.0; layer.in_dim];
            for i in 0..layer.in_dim {
                let row = i * layer.out_dim..(i + 1) * layer.out_dim;
                let hi = h[i];
                if hi != 0.0 {
                    for (gw, &d) in g.w[row.clone()].iter_mut().zip(&dz) {
                        *gw += hi * d;
                    }
                }
                dh[i] = layer.w[row].iter().zip(&dz).map(|(w, d)| w * d).sum();
            }
            let pre = &trace.pre[l - 1];
            let mask = &trace.masks[l - 1];
            dz = (0..layer.in_dim).map(|i| dh[i] * mask[i] * act.derivative(pre[i])).collect();
        }
    }

    /// Flat view of all parameters in layer order (weights then biases).
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()))
    }
}

impl Grads {
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()))
    }
}
