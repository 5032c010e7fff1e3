//! Graph-variate Fourier transform.
//!
//! Each sample `x(t)` is expanded in the eigenbasis of its own `Ω(t)`:
//! `x̂(t) = U_tᵀ x(t)`, where `Ω(t) = U_t Λ_t U_tᵀ`. Bases are orthonormal, so
//! energy is preserved per sample and over the whole signal.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gvsa::{graph_variate_tensor, MultivariateSignal, NodeFunction, SupportMatrix};
use crate::linalg::{norm2, sym_eig, Matrix, SymmetricSpectrum, DEFAULT_EIG_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvftResult {
    /// `N×T`, column `t` is `U_tᵀ x(t)`.
    pub coefficients: Matrix,
    pub bases: Vec<SymmetricSpectrum>,
    /// Eigenvector signs fixed so each column's largest-magnitude entry is
    /// positive.
    pub sign_convention: bool,
}

impl GvftResult {
    /// `‖x̂(t)‖₂` for every sample.
    pub fn column_energies(&self) -> Vec<f64> {
        (0..self.coefficients.cols())
            .map(|t| norm2(&self.coefficients.col(t)))
            .collect()
    }
}

/// Forward transform on the raw (never renormalized) graph-variate tensor.
pub fn gvft(x: &MultivariateSignal, support: &SupportMatrix, kind: NodeFunction) -> Result<GvftResult> {
    let tensor = graph_variate_tensor(x, support, kind, false, false)?;
    let mut coefficients = Matrix::zeros(x.node_count(), x.len());
    let mut bases = Vec::with_capacity(x.len());
    for t in 0..x.len() {
        let mut spectrum = sym_eig(&tensor.slice(t), DEFAULT_EIG_TOL)?;
        spectrum.fix_signs();
        coefficients.set_col(t, &spectrum.project(&x.sample(t)));
        bases.push(spectrum);
    }
    Ok(GvftResult {
        coefficients,
        bases,
        sign_convention: true,
    })
}

/// Inverse transform: column `t` becomes `U_t x̂(t)`.
pub fn inverse_gvft(result: &GvftResult) -> Result<MultivariateSignal> {
    let (n, t_len) = result.coefficients.shape();
    if result.bases.len() != t_len {
        return Err(Error::dims(format!(
            "{} bases for {t_len} coefficient columns",
            result.bases.len()
        )));
    }
    let mut out = Matrix::zeros(n, t_len);
    for (t, basis) in result.bases.iter().enumerate() {
        if basis.dim() != n {
            return Err(Error::dims(format!("basis {t} has dimension {}", basis.dim())));
        }
        out.set_col(t, &basis.synthesize(&result.coefficients.col(t)));
    }
    MultivariateSignal::new(out)
}

/// `a_t x + b_t Ω x`.
pub fn two_tap_filter_spatial(x_t: &[f64], omega_t: &Matrix, a_t: f64, b_t: f64) -> Result<Vec<f64>> {
    let shifted = omega_t.matvec(x_t)?;
    Ok(x_t.iter().zip(shifted).map(|(x, s)| a_t * x + b_t * s).collect())
}

/// The same filter applied in the spectral domain: each coefficient is
/// scaled by the frequency response `a_t + b_t λ_i`.
pub fn two_tap_filter_spectral(x_t: &[f64], spectrum: &SymmetricSpectrum, a_t: f64, b_t: f64) -> Result<Vec<f64>> {
    if x_t.len() != spectrum.dim() {
        return Err(Error::dims("signal length does not match spectrum"));
    }
    let filtered: Vec<f64> = spectrum
        .project(x_t)
        .iter()
        .zip(&spectrum.eigenvalues)
        .map(|(c, &l)| frequency_response(a_t, b_t, l) * c)
        .collect();
    Ok(spectrum.synthesize(&filtered))
}

/// `h_t(λ) = a_t + b_t λ`.
pub fn frequency_response(a_t: f64, b_t: f64, lambda: f64) -> f64 {
    a_t + b_t * lambda
}

/// Writes an `N×T` matrix as headerless CSV (plus the format comment line).
pub fn write_coefficients_csv(path: &Path, coefficients: &Matrix, header: &str) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for i in 0..coefficients.rows() {
        let row: Vec<String> = coefficients.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Minimal heatmap: one rect per coefficient, diverging blue/red scale on
/// `|value| / max|value|`.
pub fn write_heatmap_svg(path: &Path, coefficients: &Matrix) -> Result<()> {
    const CELL: usize = 8;
    let (n, t_len) = coefficients.shape();
    let scale = coefficients.max_abs().max(f64::MIN_POSITIVE);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">"#,
        t_len * CELL,
        n * CELL
    );
    for i in 0..n {
        for t in 0..t_len {
            let v = coefficients[(i, t)] / scale;
            let fade = (255.0 * (1.0 - v.abs())).round() as u8;
            let (r, g, b) = if v >= 0.0 { (255, fade, fade) } else { (fade, fade, 255) };
            let _ = writeln!(
                svg,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({r},{g},{b})"/>"#,
                t * CELL,
                i * CELL
            );
        }
    }
    svg.push_str("</svg>\n");
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(svg.as_bytes()).map_err(|e| Error::io(path, e))
}
