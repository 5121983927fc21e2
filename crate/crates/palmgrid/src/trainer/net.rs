//! Dense networks with hand-written gradients.
//!
//! Hidden layers use ELU, the output layer is linear. Parameters flatten
//! to a single `Vec<f64>` (row-major weights, then biases, layer by
//! layer) so one optimizer instance can drive a whole network plus any
//! extra trailing parameters.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    /// `weights[out][in]`.
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    elu: bool,
}

impl Layer {
    fn new(input: usize, output: usize, elu: bool, rng: &mut ChaCha8Rng) -> Self {
        // Xavier-uniform keeps activations in range for tanh-like
        // nonlinearities; close enough for ELU.
        let bound = (6.0 / (input + output) as f64).sqrt();
        Self {
            weights: (0..output)
                .map(|_| (0..input).map(|_| rng.random_range(-bound..bound)).collect())
                .collect(),
            biases: vec![0.0; output],
            elu,
        }
    }

    fn out_dim(&self) -> usize {
        self.biases.len()
    }

    fn in_dim(&self) -> usize {
        self.weights[0].len()
    }
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Per-layer activations retained for one backward pass.
pub struct MlpCache {
    /// `inputs[l]` feeds layer `l`; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pre: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    pub fn new(input: usize, hidden: &[usize], output: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input;
        for &h in hidden {
            layers.push(Layer::new(prev, h, true, rng));
            prev = h;
        }
        layers.push(Layer::new(prev, output, false, rng));
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.out_dim() * l.in_dim() + l.out_dim())
            .sum()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for layer in &self.layers {
            let mut y = layer.biases.clone();
            for (o, row) in layer.weights.iter().enumerate() {
                y[o] += row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
                if layer.elu {
                    y[o] = elu(y[o]);
                }
            }
            x = y;
        }
        x
    }

    pub fn forward_cached(&self, input: &[f64]) -> (Vec<f64>, MlpCache) {
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input.to_vec();
        for layer in &self.layers {
            cache.inputs.push(x.clone());
            let mut pre = layer.biases.clone();
            for (o, row) in layer.weights.iter().enumerate() {
                pre[o] += row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
            }
            cache.pre.push(pre.clone());
            x = if layer.elu {
                pre.iter().map(|&v| elu(v)).collect()
            } else {
                pre
            };
        }
        (x, cache)
    }

    /// Accumulate `d loss / d params` into `grad` (flat layout) given
    /// `d loss / d output` for the cached sample.
    pub fn backward(&self, cache: &MlpCache, output_grad: &[f64], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.parameter_count(), "gradient buffer size");
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.out_dim() * layer.in_dim() + layer.out_dim();
        }

        let mut dz = output_grad.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            if layer.elu {
                for (g, &p) in dz.iter_mut().zip(&cache.pre[li]) {
                    *g *= elu_grad(p);
                }
            }
            let input = &cache.inputs[li];
            let base = offsets[li];
            let in_dim = layer.in_dim();
            for (o, &g) in dz.iter().enumerate() {
                let row = base + o * in_dim;
                for (i, &x) in input.iter().enumerate() {
                    grad[row + i] += g * x;
                }
                grad[base + layer.out_dim() * in_dim + o] += g;
            }
            if li > 0 {
                let mut dx = vec![0.0; in_dim];
                for (o, &g) in dz.iter().enumerate() {
                    for (i, w) in layer.weights[o].iter().enumerate() {
                        dx[i] += g * w;
                    }
                }
                dz = dx;
            }
        }
    }

    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            for row in &layer.weights {
                out.extend_from_slice(row);
            }
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.parameter_count(), "parameter vector size");
        let mut it = flat.iter();
        for layer in &mut self.layers {
            for row in &mut layer.weights {
                for w in row.iter_mut() {
                    *w = *it.next().unwrap();
                }
            }
            for b in &mut layer.biases {
                *b = *it.next().unwrap();
            }
        }
    }
}

/// Adam with bias correction. A zero gradient leaves parameters bitwise
/// untouched, which keeps no-op updates exactly no-ops.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "optimizer size mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient size mismatch");
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}
