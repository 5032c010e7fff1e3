//! Graph-variate neural networks.
//!
//! A multivariate signal `X` (N nodes by T samples) induces a stack of
//! per-sample connectivity matrices `Ω(t) = W ∘ J(t)`, where `W` is a stable
//! long-term support and `J(t)` an instantaneous node function profile. This
//! crate builds those tensors, convolves signals against them, transforms
//! signals into their per-sample eigenbases, trains forecasting models with
//! exact gradients, and checks the spectral properties of the construction
//! numerically.

pub mod bench;
pub mod cli;
pub mod data;
mod error;
pub mod gvft;
pub mod gvnn;
pub mod gvsa;
pub mod linalg;
pub mod theory;
pub mod train;

pub use error::{Error, Result};

/// First line of every text artifact written by this crate.
pub const FORMAT_HEADER: &str = "#gvnn-kit v1";
