//! Graph-variate neural network layers and the forecasting model built from
//! them.
//!
//! Each layer computes `Y = σ(Z Θ)` with `Z = X D_a + (Ω ∗ X) D_b`, where
//! `(Ω ∗ X)(:, t) = Ω(t) x(t)` and `Ω` is rebuilt from the layer's own input.
//! Gradients flow through `Ω` into both the input and the support.

mod layer;
mod lipschitz;
mod mlp;

pub use layer::{
    gvnn_backward, gvnn_forward, ic_abs_subgradient, leaky_relu, GvnnLayerParams, LayerCache, LayerGrads, DEFAULT_SLOPE,
};
pub use lipschitz::{lipschitz_bound, two_tap_map, LipschitzReport};
pub use mlp::{Dense, Mlp, MlpCache, MlpGrads};

use serde::{Deserialize, Serialize};

use crate::gvsa::{NodeFunction, SupportMatrix};
use crate::linalg::{Matrix, Rng};
use crate::{Error, Result};

/// Readout hidden width used by default.
pub const DEFAULT_HIDDEN: usize = 128;

/// Stacked layers over `N×T` windows followed by an MLP on the flattened
/// output (node-major: index `i·T + t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvnnModel {
    pub layers: Vec<GvnnLayerParams>,
    pub readout: Mlp,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub nodes: usize,
    pub window: usize,
    pub layers: usize,
    pub kind: NodeFunction,
    pub support: SupportMatrix,
    pub renormalize: bool,
    pub zave: bool,
    pub hidden: Vec<usize>,
    pub slope: f64,
}

impl ModelSpec {
    pub fn new(nodes: usize, window: usize, support: SupportMatrix) -> Self {
        Self {
            nodes,
            window,
            layers: 1,
            kind: NodeFunction::ic(),
            support,
            renormalize: true,
            zave: true,
            hidden: vec![DEFAULT_HIDDEN],
            slope: DEFAULT_SLOPE,
        }
    }
}

/// Parameter gradients of a whole model plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<LayerGrads>,
    pub readout: MlpGrads,
    pub d_input: Matrix,
}

impl GradientSet {
    /// Same order as [`GvnnModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.layers.iter().flat_map(LayerGrads::flatten).collect();
        v.extend(self.readout.flatten());
        v
    }

    pub fn accumulate(&mut self, other: &GradientSet) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.accumulate(b);
        }
        self.readout.accumulate(&other.readout);
        if self.d_input.shape() == other.d_input.shape() {
            self.d_input.add_assign(&other.d_input).expect("same shape");
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelCache {
    layers: Vec<LayerCache>,
    readout: MlpCache,
    shape: (usize, usize),
}

impl GvnnModel {
    pub fn init(spec: &ModelSpec, rng: &mut Rng) -> Result<Self> {
        if spec.support.dim() != spec.nodes {
            return Err(Error::dims("support does not match node count"));
        }
        if spec.layers == 0 || spec.window == 0 {
            return Err(Error::InvalidConfig("model needs at least one layer and sample".into()));
        }
        let mut layers = Vec::with_capacity(spec.layers);
        for _ in 0..spec.layers {
            let mut l = GvnnLayerParams::init(
                spec.window,
                spec.support.clone(),
                spec.kind,
                spec.renormalize,
                spec.zave,
                rng,
            );
            l.slope = spec.slope;
            layers.push(l);
        }
        let readout = Mlp::init(spec.nodes * spec.window, &spec.hidden, spec.nodes, spec.slope, rng);
        Ok(Self { layers, readout })
    }

    pub fn nodes(&self) -> usize {
        self.layers[0].nodes()
    }

    pub fn window(&self) -> usize {
        self.layers[0].samples()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(GvnnLayerParams::param_count).sum::<usize>() + self.readout.param_count()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.layers.iter().flat_map(GvnnLayerParams::params).collect();
        v.extend(self.readout.params());
        v
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::dims(format!(
                "{} parameters, model has {}",
                values.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            let k = l.param_count();
            l.set_params(&values[offset..offset + k])?;
            offset += k;
        }
        self.readout.set_params(&values[offset..])
    }

    /// Sets `freeze_b` on every layer and, when freezing, zeroes `b`.
    pub fn freeze_support_path(&mut self, freeze: bool) {
        for l in &mut self.layers {
            l.freeze_b = freeze;
            if freeze {
                l.b.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }

    fn check(&self) -> Result<()> {
        let (n, t) = (self.nodes(), self.window());
        if self.layers.iter().any(|l| l.nodes() != n || l.samples() != t) {
            return Err(Error::dims("layers do not chain"));
        }
        if self.readout.inputs() != n * t || self.readout.outputs() != n {
            return Err(Error::dims("readout width does not match N·T → N"));
        }
        Ok(())
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<(Vec<f64>, ModelCache)> {
        self.check()?;
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (y, c) = gvnn_forward(&h, l)?;
            caches.push(c);
            h = y;
        }
        let (pred, readout) = self.readout.forward(h.as_slice())?;
        if !pred.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("readout".into()));
        }
        Ok((
            pred,
            ModelCache {
                layers: caches,
                readout,
                shape: x.shape(),
            },
        ))
    }

    pub fn backward(&self, cache: &ModelCache, d_pred: &[f64]) -> Result<GradientSet> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::CacheMismatch("layer count".into()));
        }
        let (readout, d_flat) = self.readout.backward(&cache.readout, d_pred)?;
        let (n, t) = cache.shape;
        let mut g = Matrix::from_vec(n, t, d_flat)?;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (l, c) in self.layers.iter().zip(&cache.layers).rev() {
            let (lg, d_in) = gvnn_backward(c, l, &g)?;
            layers.push(lg);
            g = d_in;
        }
        layers.reverse();
        Ok(GradientSet {
            layers,
            readout,
            d_input: g,
        })
    }

    pub fn zero_grads(&self) -> GradientSet {
        GradientSet {
            layers: self.layers.iter().map(LayerGrads::zeros_like).collect(),
            readout: MlpGrads {
                d_weights: self
                    .readout
                    .layers
                    .iter()
                    .map(|l| Matrix::zeros(l.weight.rows(), l.weight.cols()))
                    .collect(),
                d_biases: self.readout.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            },
            d_input: Matrix::zeros(0, 0),
        }
    }
}

/// Forecast of all `N` nodes from one `N×T` window.
pub fn model_forward(x: &Matrix, model: &GvnnModel) -> Result<Vec<f64>> {
    model.forward_cached(x).map(|(p, _)| p)
}

/// Sum of `Σ_k ⟨upstream_k, f(X_k)⟩` gradients over a batch, in item order.
pub fn batch_gradients(model: &GvnnModel, inputs: &[Matrix], upstream: &[Vec<f64>]) -> Result<GradientSet> {
    let mut total = model.zero_grads();
    for (x, d) in inputs.iter().zip(upstream) {
        let (_, cache) = model.forward_cached(x)?;
        let g = model.backward(&cache, d)?;
        total.accumulate(&g);
    }
    Ok(total)
}
