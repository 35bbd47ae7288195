//! Dense `n x r` factors stored row-major, so that row `p` is a contiguous
//! slice of length `r`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Factor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim("factor storage", rows * cols, data.len())?;
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite factor value {v}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Gaussian entries with standard deviation `scale`.
    pub fn random_normal<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.cols..(p + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.data[p * self.cols..(p + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, p: usize, k: usize) -> f64 {
        self.data[p * self.cols + k]
    }

    #[inline]
    pub fn set(&mut self, p: usize, k: usize, v: f64) {
        self.data[p * self.cols + k] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &Factor) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub(crate) fn check_same_shape(&self, other: &Factor, context: &'static str) -> Result<()> {
        check_dim(context, self.rows, other.rows)?;
        check_dim(context, self.cols, other.cols)
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Factor) -> f64 {
        debug_assert!(self.same_shape(other));
        dot(&self.data, &other.data)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &Factor) {
        debug_assert!(self.same_shape(x));
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn copy_from(&mut self, other: &Factor) {
        debug_assert!(self.same_shape(other));
        self.data.copy_from_slice(&other.data);
    }

    pub fn sub(&self, other: &Factor) -> Factor {
        debug_assert!(self.same_shape(other));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Factor {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Appends `extra` columns on the right; existing columns are kept verbatim.
    pub fn with_extra_columns(&self, extra: &Factor) -> Result<Factor> {
        check_dim("column padding", self.rows, extra.rows)?;
        let cols = self.cols + extra.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for p in 0..self.rows {
            data.extend_from_slice(self.row(p));
            data.extend_from_slice(extra.row(p));
        }
        Ok(Factor {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Dense `self * other^T` (n x n, row-major). Only meant for small checks.
    pub fn outer_dense(&self, other: &Factor) -> Vec<f64> {
        let n = self.rows;
        let mut out = vec![0.0; n * other.rows];
        for p in 0..n {
            for q in 0..other.rows {
                out[p * other.rows + q] = dot(self.row(p), other.row(q));
            }
        }
        out
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy_slice(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_contiguous() {
        let f = Factor::from_fn(3, 2, |i, j| (10 * i + j) as f64);
        assert_eq!(f.row(1), &[10.0, 11.0]);
        assert_eq!(f.get(2, 1), 21.0);
    }

    #[test]
    fn rejects_non_finite_values() {
        assert!(Factor::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Factor::from_row_major(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn padding_keeps_existing_columns() {
        let a = Factor::from_fn(2, 1, |i, _| i as f64 + 1.0);
        let b = Factor::from_fn(2, 2, |_, _| 9.0);
        let c = a.with_extra_columns(&b).unwrap();
        assert_eq!(c.cols(), 3);
        assert_eq!(c.row(1), &[2.0, 9.0, 9.0]);
    }
}
