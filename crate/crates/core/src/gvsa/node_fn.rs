use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeFunctionKind {
    /// Instantaneous correlation `|(x_i − x̄_i)(x_j − x̄_j)|`.
    Ic,
    /// Local Dirichlet energy `(x_i − x_j)²`.
    Lde,
    /// `alpha · IC + beta · LDE`, entrywise.
    Combo { alpha: f64, beta: f64 },
}

/// A node function with its diagonal convention.
///
/// `keep_diagonal` only affects the IC part. Keeping it (the default) makes
/// the IC profile the full rank-one outer product `|d||d|ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeFunction {
    pub kind: NodeFunctionKind,
    pub keep_diagonal: bool,
}

impl NodeFunction {
    pub const fn ic() -> Self {
        Self {
            kind: NodeFunctionKind::Ic,
            keep_diagonal: true,
        }
    }

    pub const fn lde() -> Self {
        Self {
            kind: NodeFunctionKind::Lde,
            keep_diagonal: true,
        }
    }

    pub const fn combo(alpha: f64, beta: f64) -> Self {
        Self {
            kind: NodeFunctionKind::Combo { alpha, beta },
            keep_diagonal: true,
        }
    }

    pub const fn with_diagonal(mut self, keep: bool) -> Self {
        self.keep_diagonal = keep;
        self
    }

    /// Weights of the IC and LDE parts.
    pub fn weights(&self) -> (f64, f64) {
        match self.kind {
            NodeFunctionKind::Ic => (1.0, 0.0),
            NodeFunctionKind::Lde => (0.0, 1.0),
            NodeFunctionKind::Combo { alpha, beta } => (alpha, beta),
        }
    }

    /// Profile `J(t)` of one sample; `temporal_mean` centres the IC part.
    pub fn profile(&self, x_t: &[f64], temporal_mean: &[f64]) -> Matrix {
        match self.kind {
            NodeFunctionKind::Ic => node_function_ic(x_t, temporal_mean, self.keep_diagonal),
            NodeFunctionKind::Lde => node_function_lde(x_t),
            NodeFunctionKind::Combo { alpha, beta } => {
                let ic = node_function_ic(x_t, temporal_mean, self.keep_diagonal);
                let lde = node_function_lde(x_t);
                Matrix::from_fn(x_t.len(), x_t.len(), |i, j| alpha * ic[(i, j)] + beta * lde[(i, j)])
            }
        }
    }
}

impl Default for NodeFunction {
    fn default() -> Self {
        Self::ic()
    }
}

/// `J_ij = (x_i − x_j)²`.
pub fn node_function_lde(x_t: &[f64]) -> Matrix {
    let n = x_t.len();
    Matrix::from_fn(n, n, |i, j| (x_t[i] - x_t[j]).powi(2))
}

/// `J_ij = |d_i d_j|` with `d = x_t − temporal_mean`; the diagonal is zeroed
/// unless `keep_diagonal`.
pub fn node_function_ic(x_t: &[f64], temporal_mean: &[f64], keep_diagonal: bool) -> Matrix {
    let n = x_t.len();
    let d: Vec<f64> = x_t.iter().zip(temporal_mean).map(|(x, m)| (x - m).abs()).collect();
    Matrix::from_fn(n, n, |i, j| if i == j && !keep_diagonal { 0.0 } else { d[i] * d[j] })
}

impl fmt::Display for NodeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeFunctionKind::Ic if self.keep_diagonal => write!(f, "ic"),
            NodeFunctionKind::Ic => write!(f, "ic-nodiag"),
            NodeFunctionKind::Lde => write!(f, "lde"),
            NodeFunctionKind::Combo { alpha, beta } if self.keep_diagonal => {
                write!(f, "combo:{alpha},{beta}")
            }
            NodeFunctionKind::Combo { alpha, beta } => write!(f, "combo-nodiag:{alpha},{beta}"),
        }
    }
}

/// Parses `ic`, `ic-nodiag`, `lde`, `combo:a,b` or `combo-nodiag:a,b`.
impl FromStr for NodeFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidConfig(format!("unknown node function `{s}`"));
        match s {
            "ic" => return Ok(Self::ic()),
            "ic-nodiag" => return Ok(Self::ic().with_diagonal(false)),
            "lde" => return Ok(Self::lde()),
            _ => {}
        }
        let (head, args) = s.split_once(':').ok_or_else(bad)?;
        let keep = match head {
            "combo" => true,
            "combo-nodiag" => false,
            _ => return Err(bad()),
        };
        let (a, b) = args.split_once(',').ok_or_else(bad)?;
        let alpha: f64 = a.trim().parse().map_err(|_| bad())?;
        let beta: f64 = b.trim().parse().map_err(|_| bad())?;
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(bad());
        }
        Ok(Self::combo(alpha, beta).with_diagonal(keep))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lde_literal() {
        let j = node_function_lde(&[1.0, 2.0, 4.0]);
        assert_eq!(
            j,
            Matrix::from_rows(&[&[0.0, 1.0, 9.0], &[1.0, 0.0, 4.0], &[9.0, 4.0, 0.0]])
        );
    }

    #[test]
    fn lde_constant_is_zero() {
        assert_eq!(node_function_lde(&[3.5; 5]), Matrix::zeros(5, 5));
    }

    #[test]
    fn ic_literal() {
        let j = node_function_ic(&[2.0, 0.0], &[1.0, 1.0], true);
        assert_eq!(j, Matrix::filled(2, 2, 1.0));
        let j = node_function_ic(&[2.0, 0.0], &[1.0, 1.0], false);
        assert_eq!(j, Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
    }

    #[test]
    fn ic_centred_zero() {
        let x = [0.3, -1.0, 2.0];
        assert_eq!(node_function_ic(&x, &x, true), Matrix::zeros(3, 3));
    }

    #[test]
    fn combo_is_weighted_sum() {
        let x = [0.5, -1.0, 2.0, 0.0];
        let m = [0.1, 0.2, 0.3, 0.4];
        let c = NodeFunction::combo(0.25, 2.0).profile(&x, &m);
        let ic = node_function_ic(&x, &m, true);
        let lde = node_function_lde(&x);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c[(i, j)], 0.25 * ic[(i, j)] + 2.0 * lde[(i, j)]);
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["ic", "ic-nodiag", "lde", "combo:0.5,1.5", "combo-nodiag:1,-2"] {
            let f: NodeFunction = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<NodeFunction>().unwrap(), f);
        }
        assert!("combo:1".parse::<NodeFunction>().is_err());
        assert!("pearson".parse::<NodeFunction>().is_err());
    }
}
