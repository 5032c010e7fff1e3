use serde::{Deserialize, Serialize};

use super::MultivariateSignal;
use crate::linalg::{Matrix, Rng};
use crate::{Error, Result};

/// How the effective support is derived from its trainable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Parameterization {
    /// `W = base`, nothing trainable.
    Fixed,
    /// `W = sym(base)`, every entry of `base` trainable.
    DenseTrainable,
    /// `W = sym(base + A·B)`, base frozen.
    AdditiveLowRank { a: Matrix, b: Matrix },
    /// `W = sym(base ∘ (A·B))`, base frozen.
    HadamardLowRank { a: Matrix, b: Matrix },
}

/// Stable support `W` with an optional trainable parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportMatrix {
    pub base: Matrix,
    pub parameterization: Parameterization,
}

/// Low-rank default `max(1, N/8)`.
pub fn default_rank(n: usize) -> usize {
    (n / 8).max(1)
}

const LOW_RANK_INIT_SCALE: f64 = 0.01;

impl SupportMatrix {
    pub fn fixed(base: Matrix) -> Result<Self> {
        base.require_square()?;
        Ok(Self {
            base,
            parameterization: Parameterization::Fixed,
        })
    }

    pub fn dense(base: Matrix) -> Result<Self> {
        base.require_square()?;
        Ok(Self {
            base,
            parameterization: Parameterization::DenseTrainable,
        })
    }

    /// `base + A·B` with `A` small Gaussian and `B = 0`, so the update starts
    /// at zero.
    pub fn additive_low_rank(base: Matrix, rank: usize, rng: &mut Rng) -> Result<Self> {
        base.require_square()?;
        let n = base.rows();
        let a = rng.normal_matrix(n, rank).scale(LOW_RANK_INIT_SCALE);
        let b = Matrix::zeros(rank, n);
        Ok(Self {
            base,
            parameterization: Parameterization::AdditiveLowRank { a, b },
        })
    }

    /// `base ∘ (A·B)` with `A·B` starting near the all-ones matrix.
    pub fn hadamard_low_rank(base: Matrix, rank: usize, rng: &mut Rng) -> Result<Self> {
        base.require_square()?;
        let n = base.rows();
        let s = 1.0 / (rank as f64).sqrt();
        let a = Matrix::from_fn(n, rank, |_, _| s + LOW_RANK_INIT_SCALE * rng.normal());
        let b = Matrix::filled(rank, n, s);
        Ok(Self {
            base,
            parameterization: Parameterization::HadamardLowRank { a, b },
        })
    }

    pub fn with_factors(base: Matrix, parameterization: Parameterization) -> Result<Self> {
        base.require_square()?;
        let n = base.rows();
        if let Parameterization::AdditiveLowRank { a, b } | Parameterization::HadamardLowRank { a, b } =
            &parameterization
        {
            if a.rows() != n || b.cols() != n || a.cols() != b.rows() {
                return Err(Error::dims(format!(
                    "low-rank factors {:?}·{:?} for a {n}x{n} support",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(Self { base, parameterization })
    }

    pub fn dim(&self) -> usize {
        self.base.rows()
    }

    pub fn rank(&self) -> Option<usize> {
        match &self.parameterization {
            Parameterization::AdditiveLowRank { a, .. } | Parameterization::HadamardLowRank { a, .. } => Some(a.cols()),
            _ => None,
        }
    }

    pub fn is_trainable(&self) -> bool {
        !matches!(self.parameterization, Parameterization::Fixed)
    }

    /// The support actually applied as a Hadamard mask.
    pub fn effective(&self) -> Matrix {
        let sym = |m: Matrix| m.symmetrized().expect("square");
        match &self.parameterization {
            Parameterization::Fixed => self.base.clone(),
            Parameterization::DenseTrainable => sym(self.base.clone()),
            Parameterization::AdditiveLowRank { a, b } => {
                let ab = a.matmul(b).expect("factor shapes checked");
                sym(self.base.add(&ab).expect("square"))
            }
            Parameterization::HadamardLowRank { a, b } => {
                let ab = a.matmul(b).expect("factor shapes checked");
                sym(self.base.hadamard(&ab).expect("square"))
            }
        }
    }

    /// Number of trainable scalars.
    pub fn param_count(&self) -> usize {
        match &self.parameterization {
            Parameterization::Fixed => 0,
            Parameterization::DenseTrainable => self.base.as_slice().len(),
            Parameterization::AdditiveLowRank { a, b } | Parameterization::HadamardLowRank { a, b } => {
                a.as_slice().len() + b.as_slice().len()
            }
        }
    }

    /// Trainable scalars in a fixed order (dense: `base`; low rank: `A` then `B`).
    pub fn params(&self) -> Vec<f64> {
        match &self.parameterization {
            Parameterization::Fixed => Vec::new(),
            Parameterization::DenseTrainable => self.base.as_slice().to_vec(),
            Parameterization::AdditiveLowRank { a, b } | Parameterization::HadamardLowRank { a, b } => {
                a.as_slice().iter().chain(b.as_slice()).copied().collect()
            }
        }
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::dims(format!(
                "{} support parameters, expected {}",
                values.len(),
                self.param_count()
            )));
        }
        match &mut self.parameterization {
            Parameterization::Fixed => {}
            Parameterization::DenseTrainable => self.base.as_mut_slice().copy_from_slice(values),
            Parameterization::AdditiveLowRank { a, b } | Parameterization::HadamardLowRank { a, b } => {
                let split = a.as_slice().len();
                a.as_mut_slice().copy_from_slice(&values[..split]);
                b.as_mut_slice().copy_from_slice(&values[split..]);
            }
        }
        Ok(())
    }

    /// Chain rule from `∂L/∂W_eff` to the trainable parameters, in
    /// [`params`](Self::params) order.
    pub fn backprop(&self, d_effective: &Matrix) -> Vec<f64> {
        let d_sym = || d_effective.symmetrized().expect("square");
        match &self.parameterization {
            Parameterization::Fixed => Vec::new(),
            Parameterization::DenseTrainable => d_sym().into_vec(),
            Parameterization::AdditiveLowRank { a, b } => {
                let dm = d_sym();
                low_rank_grads(a, b, &dm)
            }
            Parameterization::HadamardLowRank { a, b } => {
                let dp = d_sym().hadamard(&self.base).expect("square");
                low_rank_grads(a, b, &dp)
            }
        }
    }
}

/// Gradients of `P = A·B` given `∂L/∂P`: `dA = dP Bᵀ`, `dB = Aᵀ dP`.
fn low_rank_grads(a: &Matrix, b: &Matrix, dp: &Matrix) -> Vec<f64> {
    let da = dp.matmul_t(b).expect("shapes");
    let db = a.t_matmul(dp).expect("shapes");
    da.into_vec().into_iter().chain(db.into_vec()).collect()
}

/// Pearson correlation between node rows over all samples; `absolute`
/// takes entrywise magnitudes. The diagonal is exactly one.
pub fn build_support_correlation(x: &MultivariateSignal, absolute: bool) -> Result<SupportMatrix> {
    let n = x.node_count();
    let t_len = x.len();
    if t_len < 2 {
        return Err(Error::dims("correlation support needs at least two samples"));
    }
    let values = x.values();
    let mut centred = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for i in 0..n {
        let row = values.row(i);
        let mean = row.iter().sum::<f64>() / t_len as f64;
        let c: Vec<f64> = row.iter().map(|v| v - mean).collect();
        let ss = c.iter().map(|v| v * v).sum::<f64>();
        if ss == 0.0 {
            return Err(Error::ZeroVariance(i));
        }
        centred.push(c);
        norms.push(ss.sqrt());
    }
    let mut w = Matrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            let dot: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            let mut r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            if absolute {
                r = r.abs();
            }
            w[(i, j)] = r;
            w[(j, i)] = r;
        }
    }
    SupportMatrix::fixed(w)
}
