use serde::{Deserialize, Serialize};

use super::layer::{leaky_relu, GvnnLayerParams};
use crate::gvsa::{temporal_mean, NodeFunctionKind};
use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub bound: f64,
    /// `‖F(X) − F(X')‖_F / ‖X − X'‖_F`, zero when the inputs coincide.
    pub ratio: f64,
}

impl LipschitzReport {
    pub fn holds(&self) -> bool {
        self.ratio <= self.bound
    }
}

/// The two-tap map `F(X)(:, t) = σ(a_t x(t) + b_t Ω(t) x(t))` on raw `Ω`
/// (no z-scoring, renormalization or `Θ`).
pub fn two_tap_map(params: &GvnnLayerParams, x: &Matrix) -> Result<Matrix> {
    let (n, t_len) = x.shape();
    if n != params.nodes() || t_len != params.samples() {
        return Err(Error::dims("two-tap map input shape"));
    }
    let w = params.support.effective();
    let mean = temporal_mean(x);
    let mut out = Matrix::zeros(n, t_len);
    for t in 0..t_len {
        let xt = x.col(t);
        let omega = params.kind.profile(&xt, &mean).hadamard(&w)?;
        let shifted = omega.matvec(&xt)?;
        let y: Vec<f64> = xt
            .iter()
            .zip(&shifted)
            .map(|(v, s)| leaky_relu(params.a[t] * v + params.b[t] * s, params.slope))
            .collect();
        out.set_col(t, &y);
    }
    Ok(out)
}

/// Global Lipschitz bound of the two-tap map and the ratio observed on one
/// pair of inputs.
///
/// With `α` the largest row sum of `W`, `a* = max|a_t|`, `b* = max|b_t|`:
/// IC gives `a* + α b* M²` and LDE gives `a* + 4 α b* B²`, where `M` is the
/// largest deviation from the per-node temporal mean and `B` the largest
/// magnitude, both taken over `X` and `X'` together. A combination
/// `αc·IC + βc·LDE` uses `a* + α b* (|αc| M² + 4 |βc| B²)`.
pub fn lipschitz_bound(params: &GvnnLayerParams, x: &Matrix, x_prime: &Matrix) -> Result<LipschitzReport> {
    if x.shape() != x_prime.shape() {
        return Err(Error::dims("Lipschitz pair shapes differ"));
    }
    if params.slope.abs() > 1.0 {
        return Err(Error::HypothesisViolated("activation is not 1-Lipschitz".into()));
    }
    let w = params.support.effective();
    let n = w.rows();
    for i in 0..n {
        for j in 0..n {
            if w[(i, j)] < 0.0 {
                return Err(Error::NegativeSupport {
                    row: i,
                    col: j,
                    value: w[(i, j)],
                });
            }
        }
    }
    let alpha = (0..n).map(|i| w.row(i).iter().sum::<f64>()).fold(0.0, f64::max);
    let a_star = params.a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let b_star = params.b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let deviation = |m: &Matrix| {
        let mean = temporal_mean(m);
        let (r, c) = m.shape();
        let mut best: f64 = 0.0;
        for i in 0..r {
            for t in 0..c {
                best = best.max((m[(i, t)] - mean[i]).abs());
            }
        }
        best
    };
    let big_m = deviation(x).max(deviation(x_prime));
    let big_b = x.max_abs().max(x_prime.max_abs());

    let (ic, lde) = match params.kind.kind {
        NodeFunctionKind::Ic => (1.0, 0.0),
        NodeFunctionKind::Lde => (0.0, 1.0),
        NodeFunctionKind::Combo { alpha, beta } => (alpha.abs(), beta.abs()),
    };
    let bound = a_star + alpha * b_star * (ic * big_m * big_m + 4.0 * lde * big_b * big_b);

    let dist = x.sub(x_prime)?.frobenius_norm();
    let ratio = if dist == 0.0 {
        0.0
    } else {
        two_tap_map(params, x)?
            .sub(&two_tap_map(params, x_prime)?)?
            .frobenius_norm()
            / dist
    };
    Ok(LipschitzReport { bound, ratio })
}
