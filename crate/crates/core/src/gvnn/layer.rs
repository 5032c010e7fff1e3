use serde::{Deserialize, Serialize};

use crate::gvsa::{mean_std, temporal_mean, NodeFunction, SupportMatrix, EPS};
use crate::linalg::{Matrix, Rng};
use crate::{Error, Result};

/// Leaky ReLU slope used when none is given.
pub const DEFAULT_SLOPE: f64 = 0.01;

/// One graph-variate layer: `Y = σ((X D_a + (Ω ∗ X) D_b) Θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvnnLayerParams {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `T×T` time-mixing block applied on the right.
    pub theta: Matrix,
    pub support: SupportMatrix,
    pub kind: NodeFunction,
    pub renormalize: bool,
    pub zave: bool,
    /// Leaky ReLU negative slope.
    pub slope: f64,
    /// When set, `b` receives zero gradient and keeps its value.
    #[serde(default)]
    pub freeze_b: bool,
}

impl GvnnLayerParams {
    /// `a = 1`, `b = 0.1`, `Θ = I + 0.01·noise`.
    pub fn init(
        t_len: usize,
        support: SupportMatrix,
        kind: NodeFunction,
        renormalize: bool,
        zave: bool,
        rng: &mut Rng,
    ) -> Self {
        let theta = Matrix::from_fn(t_len, t_len, |i, j| {
            let noise = 0.01 * rng.normal();
            if i == j {
                1.0 + noise
            } else {
                noise
            }
        });
        Self {
            a: vec![1.0; t_len],
            b: vec![0.1; t_len],
            theta,
            support,
            kind,
            renormalize,
            zave,
            slope: DEFAULT_SLOPE,
            freeze_b: false,
        }
    }

    pub fn nodes(&self) -> usize {
        self.support.dim()
    }

    pub fn samples(&self) -> usize {
        self.a.len()
    }

    pub fn param_count(&self) -> usize {
        2 * self.a.len() + self.theta.as_slice().len() + self.support.param_count()
    }

    /// `a`, `b`, `Θ` (row-major), then the support parameters.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.a);
        p.extend_from_slice(&self.b);
        p.extend_from_slice(self.theta.as_slice());
        p.extend(self.support.params());
        p
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::dims(format!(
                "{} layer parameters, expected {}",
                values.len(),
                self.param_count()
            )));
        }
        let t = self.a.len();
        let (a, rest) = values.split_at(t);
        let (b, rest) = rest.split_at(t);
        let (theta, support) = rest.split_at(t * t);
        self.a.copy_from_slice(a);
        self.b.copy_from_slice(b);
        self.theta.as_mut_slice().copy_from_slice(theta);
        self.support.set_params(support)
    }

    fn check_shapes(&self) -> Result<()> {
        let t = self.a.len();
        if self.b.len() != t || self.theta.shape() != (t, t) {
            return Err(Error::dims(format!(
                "layer with |a|={}, |b|={}, Θ {:?}",
                t,
                self.b.len(),
                self.theta.shape()
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

#[inline]
pub fn leaky_relu_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

/// Subgradient of `|u|`: `sign(u)`, with `sign(0) = 0`.
#[inline]
pub fn ic_abs_subgradient(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Intermediates recorded by [`gvnn_forward`].
#[derive(Debug, Clone)]
pub struct LayerCache {
    input: Matrix,
    /// Per-sample `(mean, std)` across nodes when z-scoring is on.
    zstats: Option<Vec<(f64, f64)>>,
    x: Matrix,
    /// `x − temporal mean` (IC centring).
    centred: Matrix,
    w_eff: Matrix,
    profiles: Vec<Matrix>,
    raw: Vec<Matrix>,
    /// Clamped inverse square-root degrees and raw degrees, per sample.
    renorm: Option<Vec<(Vec<f64>, Vec<f64>)>>,
    omega: Vec<Matrix>,
    conv: Matrix,
    z: Matrix,
    pre: Matrix,
}

impl LayerCache {
    pub fn input(&self) -> &Matrix {
        &self.input
    }

    /// Convolution output `Ω ∗ X` before the diagonal scalings.
    pub fn conv(&self) -> &Matrix {
        &self.conv
    }

    /// `Z Θ`, the pre-activation.
    pub fn pre_activation(&self) -> &Matrix {
        &self.pre
    }

    /// The per-sample operators actually applied (after renormalization).
    pub fn omega(&self) -> &[Matrix] {
        &self.omega
    }
}

/// Gradients of one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub d_a: Vec<f64>,
    pub d_b: Vec<f64>,
    pub d_theta: Matrix,
    /// Matches [`SupportMatrix::params`] order; empty for a fixed support.
    pub d_support: Vec<f64>,
}

impl LayerGrads {
    pub fn zeros_like(params: &GvnnLayerParams) -> Self {
        let t = params.samples();
        Self {
            d_a: vec![0.0; t],
            d_b: vec![0.0; t],
            d_theta: Matrix::zeros(t, t),
            d_support: vec![0.0; params.support.param_count()],
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend_from_slice(&self.d_a);
        v.extend_from_slice(&self.d_b);
        v.extend_from_slice(self.d_theta.as_slice());
        v.extend_from_slice(&self.d_support);
        v
    }

    pub fn accumulate(&mut self, other: &LayerGrads) {
        add_into(&mut self.d_a, &other.d_a);
        add_into(&mut self.d_b, &other.d_b);
        add_into(self.d_theta.as_mut_slice(), other.d_theta.as_slice());
        add_into(&mut self.d_support, &other.d_support);
    }
}

pub(crate) fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Forward pass of one layer on an `N×T` input.
pub fn gvnn_forward(input: &Matrix, params: &GvnnLayerParams) -> Result<(Matrix, LayerCache)> {
    params.check_shapes()?;
    let (n, t_len) = input.shape();
    if n != params.nodes() || t_len != params.samples() {
        return Err(Error::dims(format!(
            "layer expects {}x{}, got {n}x{t_len}",
            params.nodes(),
            params.samples()
        )));
    }

    let (x, zstats) = if params.zave {
        let mut x = Matrix::zeros(n, t_len);
        let mut stats = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let col = input.col(t);
            let (mean, std) = mean_std(&col);
            for i in 0..n {
                x[(i, t)] = (col[i] - mean) / (std + EPS);
            }
            stats.push((mean, std));
        }
        (x, Some(stats))
    } else {
        (input.clone(), None)
    };

    let mean = temporal_mean(&x);
    let centred = Matrix::from_fn(n, t_len, |i, t| x[(i, t)] - mean[i]);
    let w_eff = params.support.effective();

    let mut profiles = Vec::with_capacity(t_len);
    let mut raw = Vec::with_capacity(t_len);
    let mut omega = Vec::with_capacity(t_len);
    let mut renorm = params.renormalize.then(|| Vec::with_capacity(t_len));
    let mut conv = Matrix::zeros(n, t_len);
    for t in 0..t_len {
        let xt = x.col(t);
        let j = params.kind.profile(&xt, &mean);
        let r = j.hadamard(&w_eff)?;
        let o = if let Some(store) = renorm.as_mut() {
            let mut ap = r.clone();
            for i in 0..n {
                ap[(i, i)] += 1.0;
            }
            let deg: Vec<f64> = (0..n).map(|i| ap.row(i).iter().sum()).collect();
            let inv: Vec<f64> = deg.iter().map(|d| d.max(EPS).powf(-0.5)).collect();
            let o = Matrix::from_fn(n, n, |i, k| inv[i] * ap[(i, k)] * inv[k]);
            store.push((inv, deg));
            o
        } else {
            r.clone()
        };
        conv.set_col(t, &o.matvec(&xt)?);
        profiles.push(j);
        raw.push(r);
        omega.push(o);
    }

    let z = Matrix::from_fn(n, t_len, |i, t| params.a[t] * x[(i, t)] + params.b[t] * conv[(i, t)]);
    let pre = z.matmul(&params.theta)?;
    let y = pre.map(|v| leaky_relu(v, params.slope));
    if !y.all_finite() || !pre.all_finite() {
        return Err(Error::NonFinite("layer forward".into()));
    }

    Ok((
        y,
        LayerCache {
            input: input.clone(),
            zstats,
            x,
            centred,
            w_eff,
            profiles,
            raw,
            renorm,
            omega,
            conv,
            z,
            pre,
        },
    ))
}

/// Reverse pass: parameter gradients and `∂L/∂input`.
pub fn gvnn_backward(cache: &LayerCache, params: &GvnnLayerParams, d_y: &Matrix) -> Result<(LayerGrads, Matrix)> {
    let (n, t_len) = cache.input.shape();
    if d_y.shape() != (n, t_len) {
        return Err(Error::CacheMismatch(format!(
            "upstream gradient {:?} for output {n}x{t_len}",
            d_y.shape()
        )));
    }
    if params.nodes() != n
        || params.samples() != t_len
        || params.renormalize != cache.renorm.is_some()
        || params.zave != cache.zstats.is_some()
    {
        return Err(Error::CacheMismatch("layer configuration changed since forward".into()));
    }

    let d_pre = Matrix::from_fn(n, t_len, |i, t| {
        d_y[(i, t)] * leaky_relu_grad(cache.pre[(i, t)], params.slope)
    });
    let d_theta = cache.z.t_matmul(&d_pre)?;
    let d_z = d_pre.matmul_t(&params.theta)?;

    let mut d_a = vec![0.0; t_len];
    let mut d_b = vec![0.0; t_len];
    let mut d_x = Matrix::zeros(n, t_len);
    let mut d_conv = Matrix::zeros(n, t_len);
    for t in 0..t_len {
        for i in 0..n {
            let g = d_z[(i, t)];
            d_a[t] += g * cache.x[(i, t)];
            d_b[t] += g * cache.conv[(i, t)];
            d_x[(i, t)] += g * params.a[t];
            d_conv[(i, t)] = g * params.b[t];
        }
    }
    if params.freeze_b {
        d_b.iter_mut().for_each(|v| *v = 0.0);
    }

    let (ic_w, lde_w) = params.kind.weights();
    let mut d_w_eff = Matrix::zeros(n, n);
    let mut d_centred = Matrix::zeros(n, t_len);
    for t in 0..t_len {
        let xt = cache.x.col(t);
        let g = d_conv.col(t);
        let omega = &cache.omega[t];

        // Ω x: dΩ = g xᵀ, dx += Ωᵀ g.
        let mut d_omega = Matrix::outer(&g, &xt);
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += omega[(i, k)] * g[i];
            }
            d_x[(k, t)] += acc;
        }

        if let Some(store) = &cache.renorm {
            d_omega = renorm_backward(&cache.raw[t], &store[t].0, &store[t].1, &d_omega);
        }

        // Ω_raw = W ∘ J.
        let profile = &cache.profiles[t];
        for i in 0..n {
            for k in 0..n {
                d_w_eff[(i, k)] += d_omega[(i, k)] * profile[(i, k)];
            }
        }
        let d_profile = d_omega.hadamard(&cache.w_eff)?;

        if lde_w != 0.0 {
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += 2.0 * (d_profile[(i, k)] + d_profile[(k, i)]) * (xt[i] - xt[k]);
                }
                d_x[(i, t)] += lde_w * acc;
            }
        }
        if ic_w != 0.0 {
            for i in 0..n {
                let di = cache.centred[(i, t)];
                let mut acc = 0.0;
                for k in 0..n {
                    if k == i && !params.kind.keep_diagonal {
                        continue;
                    }
                    let dk = cache.centred[(k, t)];
                    acc += (d_profile[(i, k)] + d_profile[(k, i)]) * ic_abs_subgradient(di * dk) * dk;
                }
                d_centred[(i, t)] += ic_w * acc;
            }
        }
    }

    // Centring over time: d = x − mean_t(x).
    if ic_w != 0.0 {
        for i in 0..n {
            let mean_grad = d_centred.row(i).iter().sum::<f64>() / t_len as f64;
            for t in 0..t_len {
                d_x[(i, t)] += d_centred[(i, t)] - mean_grad;
            }
        }
    }

    let d_input = match &cache.zstats {
        Some(stats) => zscore_backward(&cache.input, stats, &d_x),
        None => d_x,
    };

    let grads = LayerGrads {
        d_a,
        d_b,
        d_theta,
        d_support: params.support.backprop(&d_w_eff),
    };
    if !grads.flatten().iter().all(|v| v.is_finite()) || !d_input.all_finite() {
        return Err(Error::NonFinite("layer backward".into()));
    }
    Ok((grads, d_input))
}

/// Backward of `out_ij = s_i (A + I)_ij s_j`, `s = max(rowsum(A + I), eps)^{-1/2}`.
/// The clamp passes no gradient where it is active.
fn renorm_backward(raw: &Matrix, inv: &[f64], deg: &[f64], d_out: &Matrix) -> Matrix {
    let n = raw.rows();
    let ap = |i: usize, j: usize| raw[(i, j)] + if i == j { 1.0 } else { 0.0 };
    let mut d_a = Matrix::from_fn(n, n, |i, j| d_out[(i, j)] * inv[i] * inv[j]);
    let mut d_deg = vec![0.0; n];
    for i in 0..n {
        let mut d_s = 0.0;
        for j in 0..n {
            d_s += d_out[(i, j)] * ap(i, j) * inv[j] + d_out[(j, i)] * inv[j] * ap(j, i);
        }
        if deg[i] > EPS {
            d_deg[i] = d_s * -0.5 * deg[i].powf(-1.5);
        }
    }
    for i in 0..n {
        for j in 0..n {
            d_a[(i, j)] += d_deg[i];
        }
    }
    d_a
}

/// Backward of per-column `(x − mean) / (std + eps)` with unbiased std.
fn zscore_backward(input: &Matrix, stats: &[(f64, f64)], d_out: &Matrix) -> Matrix {
    let (n, t_len) = input.shape();
    let mut d_in = Matrix::zeros(n, t_len);
    let nf = n as f64;
    for t in 0..t_len {
        let (mean, std) = stats[t];
        let denom = std + EPS;
        let c: Vec<f64> = (0..n).map(|i| input[(i, t)] - mean).collect();
        let g: Vec<f64> = (0..n).map(|i| d_out[(i, t)]).collect();
        let d_std = -g.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / (denom * denom);
        let mut d_c: Vec<f64> = g.iter().map(|v| v / denom).collect();
        if std > 0.0 {
            for (dc, ci) in d_c.iter_mut().zip(&c) {
                *dc += d_std * ci / ((nf - 1.0) * std);
            }
        }
        let mean_dc = d_c.iter().sum::<f64>() / nf;
        for i in 0..n {
            d_in[(i, t)] = d_c[i] - mean_dc;
        }
    }
    d_in
}
