//! Graph-variate signal analysis.
//!
//! For a signal `X` (N×T) the graph-variate tensor stacks, for every sample
//! `t`, the masked connectivity `Ω(t) = W ∘ J(t)` where `J(t)` comes from a
//! pairwise node function of `x(t)` and `W` is a stable support.

mod node_fn;
mod support;

pub use node_fn::{node_function_ic, node_function_lde, NodeFunction, NodeFunctionKind};
pub use support::{build_support_correlation, default_rank, Parameterization, SupportMatrix};

use serde::{Deserialize, Serialize};

use crate::linalg::{batched_matvec, Matrix, Tensor3};
use crate::{Error, Result};

/// Epsilon used by z-scoring and degree clamping.
pub const EPS: f64 = 1e-5;

/// Default cap on `N·T` for the explicit Kronecker kernel.
pub const DEFAULT_KRON_CAP: usize = 8192;

/// An N-node, T-sample real signal. Column `t` is the graph signal `x(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateSignal {
    values: Matrix,
}

impl MultivariateSignal {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() < 2 || values.cols() < 1 {
            return Err(Error::dims(format!(
                "signal needs N >= 2 and T >= 1, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if !values.all_finite() {
            return Err(Error::NonFinite("signal values".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn node_count(&self) -> usize {
        self.values.rows()
    }

    pub fn len(&self) -> usize {
        self.values.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.cols() == 0
    }

    pub fn sample(&self, t: usize) -> Vec<f64> {
        self.values.col(t)
    }

    /// Per-node mean over the time axis.
    pub fn temporal_mean(&self) -> Vec<f64> {
        temporal_mean(&self.values)
    }

    /// Copy of samples `start..end`.
    pub fn window(&self, start: usize, end: usize) -> MultivariateSignal {
        let n = self.node_count();
        MultivariateSignal {
            values: Matrix::from_fn(n, end - start, |i, t| self.values[(i, start + t)]),
        }
    }
}

pub(crate) fn temporal_mean(x: &Matrix) -> Vec<f64> {
    let t_len = x.cols() as f64;
    (0..x.rows()).map(|i| x.row(i).iter().sum::<f64>() / t_len).collect()
}

/// Z-scores every column across nodes: `(x - mean) / (std + 1e-5)`, with the
/// unbiased standard deviation.
pub fn zscore_across_nodes(x: &Matrix) -> Matrix {
    let (n, t_len) = x.shape();
    let mut out = Matrix::zeros(n, t_len);
    for t in 0..t_len {
        let col = x.col(t);
        let (mean, std) = mean_std(&col);
        for i in 0..n {
            out[(i, t)] = (col[i] - mean) / (std + EPS);
        }
    }
    out
}

/// Mean and unbiased standard deviation.
pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// The stack `Ω(t)` for every sample of a signal, dims `(T, N, N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphVariateTensor {
    pub slices: Tensor3,
    pub renormalized: bool,
    pub source: NodeFunction,
}

impl GraphVariateTensor {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slice(&self, t: usize) -> Matrix {
        self.slices.slice_matrix(t)
    }
}

/// Builds `Ω(t) = W_eff ∘ J(t)` for every sample.
///
/// With `zave` the signal is first z-scored across nodes per sample. IC
/// profiles centre each node on its mean over the (possibly z-scored)
/// window. With `renormalize` each slice is passed through
/// [`renormalize_dynamic`].
pub fn graph_variate_tensor(
    x: &MultivariateSignal,
    support: &SupportMatrix,
    kind: NodeFunction,
    renormalize: bool,
    zave: bool,
) -> Result<GraphVariateTensor> {
    let n = x.node_count();
    if support.dim() != n {
        return Err(Error::dims(format!(
            "support is {0}x{0}, signal has {n} nodes",
            support.dim()
        )));
    }
    let values = if zave {
        zscore_across_nodes(x.values())
    } else {
        x.values().clone()
    };
    let w = support.effective();
    let slices = masked_slices(&values, &w, kind)?;
    let mut slices = Tensor3::from_slices(&slices)?;
    if renormalize {
        for t in 0..slices.len() {
            let r = renormalize_dynamic(&slices.slice_matrix(t), EPS);
            slices.set_slice(t, &r)?;
        }
    }
    Ok(GraphVariateTensor {
        slices,
        renormalized: renormalize,
        source: kind,
    })
}

/// `W ∘ J(t)` for each column of `values`, no normalization.
pub(crate) fn masked_slices(values: &Matrix, w: &Matrix, kind: NodeFunction) -> Result<Vec<Matrix>> {
    let mean = temporal_mean(values);
    (0..values.cols())
        .map(|t| kind.profile(&values.col(t), &mean).hadamard(w))
        .collect()
}

/// `D^{-1/2} (A + I) D^{-1/2}` with degrees `D = rowsum(A + I)` clamped
/// below at `eps`. Negative degrees therefore also clamp to `eps`.
pub fn renormalize_dynamic(slice: &Matrix, eps: f64) -> Matrix {
    let n = slice.rows();
    let mut a = slice.clone();
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| a.row(i).iter().sum::<f64>().max(eps).powf(-0.5))
        .collect();
    Matrix::from_fn(n, n, |i, j| inv_sqrt[i] * a[(i, j)] * inv_sqrt[j])
}

/// Graph-variate convolution: column `t` of the result is `Ω(t) x(t)`.
pub fn graph_conv(x: &Matrix, tensor: &GraphVariateTensor) -> Result<Matrix> {
    batched_matvec(&tensor.slices, x)
}

/// Graph-variate convolution without materializing any `N×N×T` tensor.
///
/// Uses the factored profiles: IC (diagonal kept) is `|d||d|ᵀ`, so
/// `Ω x = |d| ∘ (W (|d| ∘ x))`; LDE is `u1ᵀ − 2vvᵀ + 1uᵀ` with `u = x∘x`,
/// `v = x`, so `Ω x = u ∘ (W x) − 2 v ∘ (W (v ∘ x)) + W (u ∘ x)`. Each sample
/// then costs `O(N²)` with only `O(N)` extra memory. IC without the diagonal
/// subtracts the diagonal contribution explicitly.
pub fn graph_conv_factored(x: &MultivariateSignal, support: &SupportMatrix, kind: NodeFunction) -> Result<Matrix> {
    let n = x.node_count();
    if support.dim() != n {
        return Err(Error::dims("support does not match signal"));
    }
    let w = support.effective();
    let values = x.values();
    let mean = x.temporal_mean();
    let mut out = Matrix::zeros(n, x.len());
    for t in 0..x.len() {
        let xt = values.col(t);
        let mut y = vec![0.0; n];
        let (ic_w, lde_w) = kind.weights();
        if ic_w != 0.0 {
            let d: Vec<f64> = xt.iter().zip(&mean).map(|(a, m)| (a - m).abs()).collect();
            let dx: Vec<f64> = d.iter().zip(&xt).map(|(a, b)| a * b).collect();
            let wdx = w.matvec(&dx)?;
            for i in 0..n {
                let mut v = d[i] * wdx[i];
                if !kind.keep_diagonal {
                    v -= w[(i, i)] * d[i] * d[i] * xt[i];
                }
                y[i] += ic_w * v;
            }
        }
        if lde_w != 0.0 {
            let u: Vec<f64> = xt.iter().map(|a| a * a).collect();
            let cube: Vec<f64> = u.iter().zip(&xt).map(|(a, b)| a * b).collect();
            let wx = w.matvec(&xt)?;
            let wu = w.matvec(&u)?;
            let wcube = w.matvec(&cube)?;
            for i in 0..n {
                y[i] += lde_w * (u[i] * wx[i] - 2.0 * xt[i] * wu[i] + wcube[i]);
            }
        }
        out.set_col(t, &y);
    }
    Ok(out)
}

/// The explicit `(NT)×(NT)` spatio-temporal kernel with block `(t, t')`
/// equal to `L[t][t'] · Ω(t')`. Row/column index of node `i` at time `t` is
/// `t·N + i`.
pub fn kron_kernel(slices: &Tensor3, temporal: &Matrix, cap: usize) -> Result<Matrix> {
    let [t_len, n, _] = slices.dims();
    if temporal.shape() != (t_len, t_len) {
        return Err(Error::dims(format!(
            "temporal operator {:?} for {t_len} samples",
            temporal.shape()
        )));
    }
    let nt = n * t_len;
    if nt > cap {
        return Err(Error::MemoryBudgetExceeded { required: nt, cap });
    }
    let mut k = Matrix::zeros(nt, nt);
    for t in 0..t_len {
        for tp in 0..t_len {
            let l = temporal[(t, tp)];
            if l == 0.0 {
                continue;
            }
            let s = slices.slice(tp);
            for i in 0..n {
                let row = k.row_mut(t * n + i);
                for j in 0..n {
                    row[tp * n + j] = l * s[i * n + j];
                }
            }
        }
    }
    Ok(k)
}

/// Naive spatio-temporal convolution through the explicit Kronecker-style
/// kernel. `O(N²T²)` time and memory; used as the reference oracle and the
/// benchmark baseline.
pub fn kron_apply_naive(
    x: &MultivariateSignal,
    support: &SupportMatrix,
    kind: NodeFunction,
    temporal: &Matrix,
    cap: usize,
) -> Result<Matrix> {
    let n = x.node_count();
    let t_len = x.len();
    if temporal.shape() != (t_len, t_len) {
        return Err(Error::dims("temporal operator must be T×T"));
    }
    if n * t_len > cap {
        return Err(Error::MemoryBudgetExceeded {
            required: n * t_len,
            cap,
        });
    }
    let tensor = graph_variate_tensor(x, support, kind, false, false)?;
    let kernel = kron_kernel(&tensor.slices, temporal, cap)?;
    let mut vec_x = Vec::with_capacity(n * t_len);
    for t in 0..t_len {
        vec_x.extend(x.sample(t));
    }
    let y = kernel.matvec(&vec_x)?;
    Ok(Matrix::from_fn(n, t_len, |i, t| y[t * n + i]))
}

/// Path-graph adjacency on `T` samples (ones on the first off-diagonals).
pub fn temporal_path(t_len: usize) -> Matrix {
    Matrix::from_fn(t_len, t_len, |a, b| if a.abs_diff(b) == 1 { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests;
