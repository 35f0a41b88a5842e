//! Dense order-n tensors and the multilinear algebra used by the solvers.
//!
//! # Linearization
//!
//! Entries are stored in a single flat buffer with the **first index varying
//! fastest** (column-major, the Kolda–Bader convention). For a tensor of shape
//! `(P_1, …, P_n)` the entry `(i_1, …, i_n)` (0-based) lives at
//!
//! ```text
//! i_1 + P_1 * (i_2 + P_2 * (i_3 + … + P_{n-1} * i_n))
//! ```
//!
//! The mode-k unfolding places `i_k` on the rows; the column index enumerates
//! the remaining indices in the same first-fastest order with mode k removed,
//! i.e. column `j = Σ_{m≠k} i_m J_m` with `J_m = Π_{l<m, l≠k} P_l`.
//!
//! Modes are 0-based throughout the API. For stacked data the sample mode is
//! mode 0.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::error::{Error, Result};

/// Dense real matrix used for unfoldings and factor matrices.
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

pub(crate) fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::InvalidShape(shape.to_vec()));
    }
    Ok(shape.iter().product())
}

/// Splits a shape around `mode` into (product before, dim, product after).
fn split_at_mode(shape: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = shape[..mode].iter().product();
    let right = shape[mode + 1..].iter().product();
    (left, shape[mode], right)
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = check_shape(&shape)?;
        if data.len() != expected {
            return Err(Error::DataLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = check_shape(shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for (i, dim) in idx.iter_mut().zip(shape) {
                *i += 1;
                if *i < *dim {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// A vector (order-1 tensor).
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    /// An order-2 tensor holding the entries of `m`.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        Self::new(vec![m.nrows(), m.ncols()], m.as_slice().to_vec())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .rev()
            .fold(0, |acc, (&i, &p)| acc * p + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let i = self.linear_index(idx);
        self.data[i] = value;
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Mode-`mode` unfolding, `P_k × Π_{m≠k} P_m`.
    pub fn matricize(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        let (left, pk, right) = split_at_mode(&self.shape, mode);
        if left == 1 {
            return Ok(Matrix::from_column_slice(pk, right, &self.data));
        }
        let mut m = Matrix::zeros(pk, left * right);
        let out = m.as_mut_slice();
        for (block, dst) in self.data.chunks_exact(left * pk).zip(out.chunks_exact_mut(left * pk)) {
            for (p, col) in block.chunks_exact(left).enumerate() {
                for (a, &v) in col.iter().enumerate() {
                    dst[p + pk * a] = v;
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        if mode >= shape.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: shape.len(),
            });
        }
        let (left, pk, right) = split_at_mode(shape, mode);
        if m.nrows() != pk || m.ncols() != left * right {
            return Err(Error::DimensionMismatch(alloc::format!(
                "cannot fold a {}x{} matrix on mode {mode} into shape {shape:?}",
                m.nrows(),
                m.ncols()
            )));
        }
        if left == 1 {
            return Ok(Self {
                shape: shape.to_vec(),
                data: m.as_slice().to_vec(),
            });
        }
        let mut data = vec![0.0; n];
        for (block, src) in data.chunks_exact_mut(left * pk).zip(m.as_slice().chunks_exact(left * pk)) {
            for (p, col) in block.chunks_exact_mut(left).enumerate() {
                for (a, v) in col.iter_mut().enumerate() {
                    *v = src[p + pk * a];
                }
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// `self ×_mode u` with `u` of size `K × P_mode`; mode `mode` becomes `K`.
    pub fn mode_product(&self, u: &Matrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let (left, pk, right) = split_at_mode(&self.shape, mode);
        if u.ncols() != pk {
            return Err(Error::DimensionMismatch(alloc::format!(
                "mode-{mode} product needs {pk} columns, matrix has {}",
                u.ncols()
            )));
        }
        let k = u.nrows();
        let mut shape = self.shape.clone();
        shape[mode] = k;
        check_shape(&shape)?;
        let mut data = vec![0.0; left * k * right];
        if left == 1 {
            let t = DMatrixView::from_slice(&self.data, pk, right);
            let mut out = DMatrixViewMut::from_slice(&mut data, k, right);
            out.gemm(1.0, u, &t, 0.0);
        } else {
            let ut = u.transpose();
            for b in 0..right {
                let t = DMatrixView::from_slice(&self.data[left * pk * b..left * pk * (b + 1)], left, pk);
                let mut out = DMatrixViewMut::from_slice(&mut data[left * k * b..left * k * (b + 1)], left, k);
                out.gemm(1.0, &t, &ut, 0.0);
            }
        }
        Ok(Self { shape, data })
    }

    /// Applies `mats[i]` on mode `modes[i]` in sequence.
    pub fn multi_mode_product(&self, mats: &[&Matrix], modes: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        for (m, &mode) in mats.iter().zip(modes) {
            out = out.mode_product(m, mode)?;
        }
        Ok(out)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.frobenius_norm_sq())
    }

    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                found: other.shape.clone(),
            });
        }
        Ok(())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(libm::sqrt(self.distance_sq(other)?))
    }

    /// Squared Frobenius distance.
    pub fn distance_sq(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Sub-tensor made of the listed indices along mode 0 (the sample mode).
    pub fn select_samples(&self, samples: &[usize]) -> Result<Self> {
        let m = self.shape[0];
        let rest = self.data.len() / m;
        if samples.is_empty() {
            return Err(Error::InvalidParameter("empty sample selection".into()));
        }
        if let Some(&bad) = samples.iter().find(|&&s| s >= m) {
            return Err(Error::InvalidParameter(alloc::format!(
                "sample {bad} out of range for {m} samples"
            )));
        }
        let k = samples.len();
        let mut data = vec![0.0; k * rest];
        for c in 0..rest {
            for (r, &s) in samples.iter().enumerate() {
                data[r + k * c] = self.data[s + m * c];
            }
        }
        let mut shape = self.shape.clone();
        shape[0] = k;
        Ok(Self { shape, data })
    }

    /// Per-sample slice along mode 0, returned as a tensor of the remaining modes.
    /// For an order-1 tensor the slice has shape `[1]`.
    pub fn sample(&self, i: usize) -> Result<Self> {
        let stacked = self.select_samples(&[i])?;
        let shape = if self.order() == 1 {
            vec![1]
        } else {
            self.shape[1..].to_vec()
        };
        Self::new(shape, stacked.data)
    }

    /// Stacks equally shaped tensors along a new leading sample mode.
    pub fn stack(samples: &[Self]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidParameter("cannot stack zero tensors".into()))?;
        let m = samples.len();
        let rest = first.len();
        let mut data = vec![0.0; m * rest];
        for (i, s) in samples.iter().enumerate() {
            first.check_same_shape(s)?;
            for (c, v) in s.data.iter().enumerate() {
                data[i + m * c] = *v;
            }
        }
        let mut shape = vec![m];
        shape.extend_from_slice(&first.shape);
        Ok(Self { shape, data })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Contraction `B * X`: sums over all modes of `x`, which must equal the
/// leading modes of `b`. The result carries the trailing modes of `b`.
pub fn contract(x: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let l = x.order();
    if b.order() <= l || b.shape[..l] != x.shape[..] {
        return Err(Error::ShapeMismatch {
            expected: x.shape.clone(),
            found: b.shape.clone(),
        });
    }
    let p: usize = x.len();
    let q = b.len() / p;
    let bm = DMatrixView::from_slice(&b.data, p, q);
    let xv = DMatrixView::from_slice(&x.data, 1, p);
    let out = xv * bm;
    DenseTensor::new(b.shape[l..].to_vec(), out.as_slice().to_vec())
}

/// Batched contraction over the leading sample mode of `x`:
/// `x` has shape `(m, P_1, …, P_l)`, `b` has shape `(P_1, …, P_l, Q_1, …, Q_d)`
/// and the result has shape `(m, Q_1, …, Q_d)`.
pub fn contract_batched(x: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let l = x.order() - 1;
    if l == 0 || b.order() <= l || b.shape[..l] != x.shape[1..] {
        return Err(Error::ShapeMismatch {
            expected: x.shape[1..].to_vec(),
            found: b.shape.clone(),
        });
    }
    let m = x.shape[0];
    let p = x.len() / m;
    let q = b.len() / p;
    let xm = DMatrixView::from_slice(&x.data, m, p);
    let bm = DMatrixView::from_slice(&b.data, p, q);
    let out = xm * bm;
    let mut shape = vec![m];
    shape.extend_from_slice(&b.shape[l..]);
    DenseTensor::new(shape, out.as_slice().to_vec())
}
