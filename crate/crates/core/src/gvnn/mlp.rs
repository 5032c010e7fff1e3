use serde::{Deserialize, Serialize};

use super::layer::{add_into, leaky_relu, leaky_relu_grad};
use crate::linalg::{Matrix, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `out × in`.
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    /// PyTorch-style fan-in uniform init `U(±1/√fan_in)`.
    pub fn init(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        Self {
            weight: rng.uniform_matrix(outputs, inputs, -bound, bound),
            bias: (0..outputs).map(|_| rng.uniform_in(-bound, bound)).collect(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }
}

/// Readout head: dense layers with Leaky ReLU between them, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each dense layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub d_weights: Vec<Matrix>,
    pub d_biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for (w, b) in self.d_weights.iter().zip(&self.d_biases) {
            v.extend_from_slice(w.as_slice());
            v.extend_from_slice(b);
        }
        v
    }

    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            add_into(a.as_mut_slice(), b.as_slice());
        }
        for (a, b) in self.d_biases.iter_mut().zip(&other.d_biases) {
            add_into(a, b);
        }
    }
}

impl Mlp {
    pub fn init(inputs: usize, hidden: &[usize], outputs: usize, slope: f64, rng: &mut Rng) -> Self {
        let mut widths = vec![inputs];
        widths.extend_from_slice(hidden);
        widths.push(outputs);
        Self {
            layers: widths.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect(),
            slope,
        }
    }

    pub fn inputs(&self) -> usize {
        self.layers.first().map_or(0, Dense::inputs)
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, Dense::outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Per layer: weight (row-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            v.extend_from_slice(l.weight.as_slice());
            v.extend_from_slice(&l.bias);
        }
        v
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::dims("readout parameter count"));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let w = l.weight.as_mut_slice();
            w.copy_from_slice(&values[offset..offset + w.len()]);
            offset += w.len();
            let nb = l.bias.len();
            l.bias.copy_from_slice(&values[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        if input.len() != self.inputs() {
            return Err(Error::dims(format!(
                "readout expects {} inputs, got {}",
                self.inputs(),
                input.len()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len().saturating_sub(1));
        let mut h = input.to_vec();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = l.weight.matvec(&h)?;
            add_into(&mut z, &l.bias);
            inputs.push(std::mem::take(&mut h));
            if k == last {
                h = z;
            } else {
                h = z.iter().map(|&v| leaky_relu(v, self.slope)).collect();
                pre.push(z);
            }
        }
        Ok((h, MlpCache { inputs, pre }))
    }

    /// Returns parameter gradients and `∂L/∂input`.
    pub fn backward(&self, cache: &MlpCache, d_out: &[f64]) -> Result<(MlpGrads, Vec<f64>)> {
        if d_out.len() != self.outputs() || cache.inputs.len() != self.layers.len() {
            return Err(Error::CacheMismatch("readout cache".into()));
        }
        let mut d_weights = vec![Matrix::zeros(0, 0); self.layers.len()];
        let mut d_biases = vec![Vec::new(); self.layers.len()];
        let mut g = d_out.to_vec();
        for k in (0..self.layers.len()).rev() {
            if k + 1 < self.layers.len() {
                for (gi, &z) in g.iter_mut().zip(&cache.pre[k]) {
                    *gi *= leaky_relu_grad(z, self.slope);
                }
            }
            let l = &self.layers[k];
            d_weights[k] = Matrix::outer(&g, &cache.inputs[k]);
            d_biases[k] = g.clone();
            let mut d_in = vec![0.0; l.inputs()];
            for (o, &go) in g.iter().enumerate() {
                for (di, &w) in d_in.iter_mut().zip(l.weight.row(o)) {
                    *di += go * w;
                }
            }
            g = d_in;
        }
        Ok((MlpGrads { d_weights, d_biases }, g))
    }
}
