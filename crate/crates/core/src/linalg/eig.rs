use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

/// Default convergence tolerance for [`sym_eig`], relative to `‖A‖_F`.
pub const DEFAULT_EIG_TOL: f64 = 1e-14;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SymmetricSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// Flips each eigenvector so its largest-magnitude entry is positive.
    ///
    /// Ties on magnitude resolve to the lowest row index.
    pub fn fix_signs(&mut self) {
        let n = self.eigenvectors.rows();
        for j in 0..self.eigenvectors.cols() {
            let mut best = 0;
            for i in 1..n {
                if self.eigenvectors[(i, j)].abs() > self.eigenvectors[(best, j)].abs() {
                    best = i;
                }
            }
            if n > 0 && self.eigenvectors[(best, j)] < 0.0 {
                for i in 0..n {
                    self.eigenvectors[(i, j)] = -self.eigenvectors[(i, j)];
                }
            }
        }
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        Matrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)]).sum()
        })
    }

    /// Coefficients `Vᵀ x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|k| (0..n).map(|i| self.eigenvectors[(i, k)] * x[i]).sum())
            .collect()
    }

    /// Synthesis `V c`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        self.eigenvectors
            .matvec(coeffs)
            .expect("coefficient length matches spectrum")
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(A + Aᵀ)/2` first. Sweeps stop once the
/// largest off-diagonal magnitude is at most `tol · ‖A‖_F`.
pub fn sym_eig(a: &Matrix, tol: f64) -> Result<SymmetricSpectrum> {
    let mut a = a.symmetrized()?;
    let n = a.rows();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = tol * scale;

    let mut converged = scale == 0.0 || n < 2;
    let mut off = 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        off = max_off_diagonal(&a);
        converged = off <= threshold;
    }
    if !converged {
        return Err(Error::NonConvergence { sweeps, off });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&k| a[(k, k)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymmetricSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn max_off_diagonal(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    // Negligible relative to both diagonal entries: drop it.
    let g = 100.0 * apq.abs();
    if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
        a[(p, q)] = 0.0;
        a[(q, p)] = 0.0;
        return;
    }
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Singular values in descending order.
///
/// Symmetric inputs use `|λ|` from their own eigendecomposition; general
/// inputs use square roots of the eigenvalues of `AᵀA` (negative round-off
/// clamped to zero).
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let mut sv: Vec<f64> = if a.is_square() && a.is_symmetric(0.0) {
        sym_eig(a, DEFAULT_EIG_TOL)?
            .eigenvalues
            .into_iter()
            .map(f64::abs)
            .collect()
    } else {
        let gram = a.t_matmul(a)?;
        sym_eig(&gram, DEFAULT_EIG_TOL)?
            .eigenvalues
            .into_iter()
            .map(|l| l.max(0.0).sqrt())
            .collect()
    };
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Number of singular values exceeding `rel_tol` times the largest one.
pub fn numeric_rank(a: &Matrix, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(a)?;
    let Some(&largest) = sv.first() else {
        return Ok(0);
    };
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * largest).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let s = sym_eig(&Matrix::identity(3), 1e-14).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert_eq!(s.eigenvectors, Matrix::identity(3));
    }

    #[test]
    fn swap_matrix_spectrum() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = sym_eig(&a, 1e-14).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
        assert!(s.reconstruct().max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn not_square() {
        assert!(matches!(
            sym_eig(&Matrix::zeros(2, 3), 1e-12),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn sign_convention() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let mut s = sym_eig(&a, 1e-14).unwrap();
        s.fix_signs();
        for j in 0..2 {
            let col = s.eigenvectors.col(j);
            let big = col
                .iter()
                .copied()
                .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn rank_edge_cases() {
        assert_eq!(numeric_rank(&Matrix::zeros(4, 4), 1e-10).unwrap(), 0);
        let u = [1.0, -2.0, 0.5];
        assert_eq!(numeric_rank(&Matrix::outer(&u, &u), 1e-10).unwrap(), 1);
        let v = [3.0, 1.0];
        assert_eq!(numeric_rank(&Matrix::outer(&u, &v), 1e-7).unwrap(), 1);
    }
}
