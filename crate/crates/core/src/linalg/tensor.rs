use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

/// Contiguous rank-3 array; axis 0 varies slowest.
///
/// Graph-variate tensors use dims `(T, N, N)` so that the `N×N` slice for one
/// time sample is a contiguous row-major block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::dims(format!("{} values for tensor dims {dims:?}", data.len())));
        }
        Ok(Self { dims, data })
    }

    /// Stacks equally shaped matrices along a new leading axis.
    pub fn from_slices(slices: &[Matrix]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Ok(Self::zeros([0, 0, 0]));
        };
        let (r, c) = first.shape();
        let mut data = Vec::with_capacity(slices.len() * r * c);
        for s in slices {
            first.require_same_shape(s)?;
            data.extend_from_slice(s.as_slice());
        }
        Ok(Self {
            dims: [slices.len(), r, c],
            data,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims[0]
    }

    pub fn is_empty(&self) -> bool {
        self.dims[0] == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn slice_len(&self) -> usize {
        self.dims[1] * self.dims[2]
    }

    /// Borrowed row-major data of slice `k` along axis 0.
    pub fn slice(&self, k: usize) -> &[f64] {
        let len = self.slice_len();
        &self.data[k * len..(k + 1) * len]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let len = self.slice_len();
        &mut self.data[k * len..(k + 1) * len]
    }

    pub fn slice_matrix(&self, k: usize) -> Matrix {
        Matrix::from_vec(self.dims[1], self.dims[2], self.slice(k).to_vec()).expect("slice length matches dims")
    }

    pub fn set_slice(&mut self, k: usize, m: &Matrix) -> Result<()> {
        if m.shape() != (self.dims[1], self.dims[2]) {
            return Err(Error::dims(format!(
                "slice {:?} into tensor {:?}",
                m.shape(),
                self.dims
            )));
        }
        self.slice_mut(k).copy_from_slice(m.as_slice());
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    pub fn slices(&self) -> impl Iterator<Item = Matrix> + '_ {
        (0..self.dims[0]).map(|k| self.slice_matrix(k))
    }
}

/// Applies slice `t` to column `t` of `vectors`, one mat-vec per time step.
///
/// `slices` has dims `(T, N, N)` and `vectors` is `N×T`.
pub fn batched_matvec(slices: &Tensor3, vectors: &Matrix) -> Result<Matrix> {
    let [t_len, n, m] = slices.dims();
    if n != m || vectors.rows() != n || vectors.cols() != t_len {
        return Err(Error::dims(format!(
            "batched_matvec slices {:?} with vectors {:?}",
            slices.dims(),
            vectors.shape()
        )));
    }
    let mut out = Matrix::zeros(n, t_len);
    let mut x = vec![0.0; n];
    for t in 0..t_len {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = vectors[(i, t)];
        }
        let s = slices.slice(t);
        for i in 0..n {
            out[(i, t)] = super::dot(&s[i * n..(i + 1) * n], &x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_slices_pass_through() {
        let x = Matrix::from_fn(3, 4, |i, t| (i * 10 + t) as f64);
        let slices = Tensor3::from_slices(&vec![Matrix::identity(3); 4]).unwrap();
        assert_eq!(batched_matvec(&slices, &x).unwrap(), x);
    }

    #[test]
    fn swap_slice() {
        let slices = Tensor3::from_slices(&[Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])]).unwrap();
        let x = Matrix::from_rows(&[&[3.0], &[5.0]]);
        let y = batched_matvec(&slices, &x).unwrap();
        assert_eq!(y.col(0), vec![5.0, 3.0]);
    }

    #[test]
    fn dim_mismatch() {
        let slices = Tensor3::zeros([2, 3, 3]);
        assert!(batched_matvec(&slices, &Matrix::zeros(3, 3)).is_err());
        assert!(batched_matvec(&slices, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn slice_round_trip() {
        let a = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let b = a.scale(-2.0);
        let t = Tensor3::from_slices(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(t.slice_matrix(0), a);
        assert_eq!(t.slice_matrix(1), b);
        assert_eq!(t.get(1, 2, 1), b[(2, 1)]);
    }
}
