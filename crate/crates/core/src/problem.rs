//! Problem data for `min <C, X>  s.t.  <A_i, X> = b_i, X ⪰ 0` and the
//! constraint map evaluated directly on low-rank factors.
//!
//! All matrix products here go through per-entry accumulation over the
//! sparse coordinate storage; `U V^T` is never formed.

use crate::error::{check_dim, Error, Result};
use crate::factor::{axpy_slice, dot, Factor};

/// Symmetric matrix in coordinate form, upper triangle only.
///
/// A stored entry `(i, j, v)` with `i < j` stands for both `(i, j)` and
/// `(j, i)`. Entries are kept sorted by `(i, j)` so that equality is
/// structural.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymMatrix {
    /// Builds a matrix from triplets. Lower-triangle triplets are mirrored
    /// into the upper triangle; duplicates after mirroring are rejected.
    pub fn new(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .map(|(i, j, v)| if i <= j { (i, j, v) } else { (j, i, v) })
            .collect();
        for &(i, j, v) in &entries {
            if j >= dim {
                return Err(Error::InvalidEntry(format!(
                    "index ({i}, {j}) out of range for dimension {dim}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidEntry(format!("non-finite value at ({i}, {j})")));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidEntry(format!(
                "duplicate entry ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, 1.0)).collect(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `sum_diag v^2 + 2 sum_offdiag v^2`
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum()
    }

    /// 1-norm of the fully flattened matrix (off-diagonals counted twice).
    pub fn flat_l1_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v.abs() } else { 2.0 * v.abs() })
            .sum()
    }

    /// `<M, U V^T>` accumulated over the stored entries.
    pub fn inner_with_factors(&self, u: &Factor, v: &Factor) -> f64 {
        let mut acc = 0.0;
        for &(p, q, val) in &self.entries {
            if p == q {
                acc += val * dot(u.row(p), v.row(p));
            } else {
                acc += val * (dot(u.row(p), v.row(q)) + dot(u.row(q), v.row(p)));
            }
        }
        acc
    }

    /// `out += coef * M W`
    pub fn mul_factor_acc(&self, coef: f64, w: &Factor, out: &mut Factor) {
        if coef == 0.0 {
            return;
        }
        for &(p, q, val) in &self.entries {
            let s = coef * val;
            if p == q {
                let (src, dst) = split_rows(w, out, p, p);
                axpy_slice(s, src, dst);
            } else {
                let (src, dst) = split_rows(w, out, q, p);
                axpy_slice(s, src, dst);
                let (src, dst) = split_rows(w, out, p, q);
                axpy_slice(s, src, dst);
            }
        }
    }

    /// `y += coef * M x` for plain vectors.
    pub fn mul_vec_acc(&self, coef: f64, x: &[f64], y: &mut [f64]) {
        for &(p, q, val) in &self.entries {
            let s = coef * val;
            y[p] += s * x[q];
            if p != q {
                y[q] += s * x[p];
            }
        }
    }

    /// Dense row-major copy. Test and diagnostics helper for small `dim`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for &(i, j, v) in &self.entries {
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
        out
    }

    /// `Some((i, v))` when the matrix is a single diagonal entry.
    pub fn as_single_diagonal(&self) -> Option<(usize, f64)> {
        match self.entries.as_slice() {
            [(i, j, v)] if i == j => Some((*i, *v)),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.entries.len() == self.dim
            && self.entries.iter().enumerate().all(|(k, &(i, j, v))| i == k && j == k && v == 1.0)
    }
}

#[inline]
fn split_rows<'a>(w: &'a Factor, out: &'a mut Factor, src: usize, dst: usize) -> (&'a [f64], &'a mut [f64]) {
    (w.row(src), out.row_mut(dst))
}

/// Problem family, used only to pick heuristic defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassTag {
    MaxCut,
    MatrixCompletion,
    Generic,
}

/// Whether the stored (minimised) objective is the negation of a
/// maximisation objective. Reports flip the sign back for `Maximize`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// Immutable SDP instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    n: usize,
    objective: SparseSymMatrix,
    constraints: Vec<SparseSymMatrix>,
    rhs: Vec<f64>,
    class_tag: ClassTag,
    sense: ObjectiveSense,
    /// SDPA block sizes (negative = diagonal block). Metadata only.
    block_sizes: Vec<i64>,
}

impl SdpProblem {
    pub fn new(objective: SparseSymMatrix, constraints: Vec<SparseSymMatrix>, rhs: Vec<f64>) -> Result<Self> {
        let n = objective.dim();
        if constraints.is_empty() {
            return Err(Error::InvalidArgument("at least one constraint is required".into()));
        }
        check_dim("rhs length", constraints.len(), rhs.len())?;
        for a in &constraints {
            check_dim("constraint dimension", n, a.dim())?;
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite right-hand side".into()));
        }
        Ok(Self {
            n,
            objective,
            constraints,
            rhs,
            class_tag: ClassTag::Generic,
            sense: ObjectiveSense::Minimize,
            block_sizes: vec![n as i64],
        })
    }

    pub fn with_class_tag(mut self, tag: ClassTag) -> Self {
        self.class_tag = tag;
        self
    }

    pub fn with_sense(mut self, sense: ObjectiveSense) -> Self {
        self.sense = sense;
        self
    }

    pub fn with_block_sizes(mut self, blocks: Vec<i64>) -> Result<Self> {
        let total: u64 = blocks.iter().map(|b| b.unsigned_abs()).sum();
        check_dim("block sizes", self.n, total as usize)?;
        if blocks.contains(&0) {
            return Err(Error::InvalidArgument("zero block size".into()));
        }
        self.block_sizes = blocks;
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &SparseSymMatrix {
        &self.objective
    }

    pub fn constraints(&self) -> &[SparseSymMatrix] {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn class_tag(&self) -> ClassTag {
        self.class_tag
    }

    pub fn sense(&self) -> ObjectiveSense {
        self.sense
    }

    pub fn block_sizes(&self) -> &[i64] {
        &self.block_sizes
    }

    /// `s_A = sum_i ||A_i||_F^2`
    pub fn constraint_frobenius_sq_sum(&self) -> f64 {
        self.constraints.iter().map(SparseSymMatrix::frobenius_norm_sq).sum()
    }

    /// Guesses the class from structure: MaxCut when every constraint is a
    /// distinct unit diagonal entry with `b_i = 1` and `m = n`; matrix
    /// completion when `C = I` and every constraint is a single unit
    /// off-diagonal entry.
    pub fn detect_class(&self) -> ClassTag {
        let n = self.n;
        if self.m() == n && self.rhs.iter().all(|&b| b == 1.0) {
            let mut seen = vec![false; n];
            let all_diag = self.constraints.iter().all(|a| match a.as_single_diagonal() {
                Some((i, v)) if v == 1.0 && !seen[i] => {
                    seen[i] = true;
                    true
                }
                _ => false,
            });
            if all_diag {
                return ClassTag::MaxCut;
            }
        }
        if self.objective.is_identity()
            && self
                .constraints
                .iter()
                .all(|a| matches!(a.entries(), [(i, j, v)] if i != j && *v == 1.0))
        {
            return ClassTag::MatrixCompletion;
        }
        ClassTag::Generic
    }

    fn check_factors(&self, u: &Factor, v: &Factor) -> Result<()> {
        check_dim("factor rows", self.n, u.rows())?;
        check_dim("factor rows", self.n, v.rows())?;
        check_dim("factor columns", u.cols(), v.cols())
    }

    /// `A(U V^T)`, component `i` equal to `<A_i, U V^T>`.
    pub fn apply_a(&self, u: &Factor, v: &Factor) -> Result<Vec<f64>> {
        self.check_factors(u, v)?;
        Ok(self.apply_a_unchecked(u, v))
    }

    pub(crate) fn apply_a_unchecked(&self, u: &Factor, v: &Factor) -> Vec<f64> {
        self.constraints.iter().map(|a| a.inner_with_factors(u, v)).collect()
    }

    /// `A(U V^T) - b`
    pub fn residual(&self, u: &Factor, v: &Factor) -> Result<Vec<f64>> {
        let mut r = self.apply_a(u, v)?;
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri -= bi;
        }
        Ok(r)
    }

    /// `(sum_i y_i A_i) W`
    pub fn apply_a_adjoint_times(&self, y: &[f64], w: &Factor) -> Result<Factor> {
        check_dim("adjoint coefficients", self.m(), y.len())?;
        check_dim("factor rows", self.n, w.rows())?;
        let mut out = Factor::zeros(w.rows(), w.cols());
        self.adjoint_times_acc(0.0, y, w, &mut out);
        Ok(out)
    }

    /// `out += (c0 C + sum_i y_i A_i) W`. No shape checks.
    pub(crate) fn adjoint_times_acc(&self, c0: f64, y: &[f64], w: &Factor, out: &mut Factor) {
        self.objective.mul_factor_acc(c0, w, out);
        for (a, &yi) in self.constraints.iter().zip(y) {
            a.mul_factor_acc(yi, w, out);
        }
    }

    /// `y_out += (c0 C + sum_i y_i A_i) x` for plain vectors.
    pub(crate) fn adjoint_vec_acc(&self, c0: f64, y: &[f64], x: &[f64], out: &mut [f64]) {
        self.objective.mul_vec_acc(c0, x, out);
        for (a, &yi) in self.constraints.iter().zip(y) {
            if yi != 0.0 {
                a.mul_vec_acc(yi, x, out);
            }
        }
    }

    /// `<C, U V^T>`
    pub fn objective_value(&self, u: &Factor, v: &Factor) -> Result<f64> {
        self.check_factors(u, v)?;
        Ok(self.objective.inner_with_factors(u, v))
    }

    /// Objective in the caller's original sense (sign flipped back for
    /// maximisation problems).
    pub fn reported_objective(&self, stored: f64) -> f64 {
        match self.sense {
            ObjectiveSense::Minimize => stored,
            ObjectiveSense::Maximize => -stored,
        }
    }
}

/// Maps a split solution `(U, V, lambda)` to the factor `(U + V) / 2` and
/// the doubled multiplier `2 lambda`.
pub fn recombine(u: &Factor, v: &Factor, lambda: &[f64]) -> Result<(Factor, Vec<f64>)> {
    u.check_same_shape(v, "recombine")?;
    let data = u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| 0.5 * (a + b)).collect();
    let hat = Factor::from_row_major(u.rows(), u.cols(), data)?;
    Ok((hat, lambda.iter().map(|l| 2.0 * l).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(vals: &[f64]) -> Factor {
        Factor::from_row_major(vals.len(), 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn identity_constraint_is_trace() {
        let p = SdpProblem::new(SparseSymMatrix::zeros(2), vec![SparseSymMatrix::identity(2)], vec![1.0]).unwrap();
        let u = col(&[1.0, 2.0]);
        assert_eq!(p.apply_a(&u, &u).unwrap(), vec![5.0]);
    }

    #[test]
    fn off_diagonal_constraint_counts_both_halves() {
        let a = SparseSymMatrix::new(2, [(0, 1, 1.0)]).unwrap();
        let p = SdpProblem::new(SparseSymMatrix::zeros(2), vec![a], vec![0.0]).unwrap();
        let u = col(&[1.0, 2.0]);
        assert_eq!(p.apply_a(&u, &u).unwrap(), vec![4.0]);
    }

    #[test]
    fn lower_triangle_input_is_mirrored() {
        let a = SparseSymMatrix::new(3, [(2, 0, 1.5)]).unwrap();
        assert_eq!(a.entries(), &[(0, 2, 1.5)]);
        assert!(SparseSymMatrix::new(3, [(2, 0, 1.0), (0, 2, 1.0)]).is_err());
        assert!(SparseSymMatrix::new(3, [(0, 3, 1.0)]).is_err());
        assert!(SparseSymMatrix::new(3, [(0, 1, f64::INFINITY)]).is_err());
    }

    #[test]
    fn frobenius_and_flat_norms_double_off_diagonals() {
        let a = SparseSymMatrix::new(2, [(0, 0, 1.0), (0, 1, -2.0)]).unwrap();
        assert_eq!(a.frobenius_norm_sq(), 1.0 + 8.0);
        assert_eq!(a.flat_l1_norm(), 1.0 + 4.0);
    }

    #[test]
    fn adjoint_with_zero_weights_is_zero() {
        let a = SparseSymMatrix::new(3, [(0, 1, 1.0), (2, 2, 3.0)]).unwrap();
        let p = SdpProblem::new(SparseSymMatrix::identity(3), vec![a], vec![1.0]).unwrap();
        let w = Factor::from_fn(3, 2, |i, j| (i + j) as f64);
        let out = p.apply_a_adjoint_times(&[0.0], &w).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_of_identity_scales() {
        let p = SdpProblem::new(SparseSymMatrix::zeros(3), vec![SparseSymMatrix::identity(3)], vec![1.0]).unwrap();
        let w = Factor::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        let out = p.apply_a_adjoint_times(&[2.5], &w).unwrap();
        for (a, b) in out.as_slice().iter().zip(w.as_slice()) {
            assert_eq!(*a, 2.5 * b);
        }
    }

    #[test]
    fn recombine_examples() {
        let u = Factor::from_fn(2, 2, |i, j| (i + 3 * j) as f64);
        let (hat, _) = recombine(&u, &u, &[]).unwrap();
        assert_eq!(hat, u);

        let w = Factor::from_fn(2, 2, |i, j| (i as f64) - (j as f64) * 0.5);
        let mut two_w = w.clone();
        two_w.scale(2.0);
        let (hat, lam) = recombine(&Factor::zeros(2, 2), &two_w, &[1.0, -3.0]).unwrap();
        assert_eq!(hat, w);
        assert_eq!(lam, vec![2.0, -6.0]);

        assert!(recombine(&Factor::zeros(2, 2), &Factor::zeros(2, 3), &[]).is_err());
    }

    #[test]
    fn objective_examples() {
        let u = Factor::from_fn(3, 2, |i, j| (i as f64) + 0.5 * j as f64);
        let p = SdpProblem::new(SparseSymMatrix::zeros(3), vec![SparseSymMatrix::identity(3)], vec![1.0]).unwrap();
        assert_eq!(p.objective_value(&u, &u).unwrap(), 0.0);
        let p = SdpProblem::new(SparseSymMatrix::identity(3), vec![SparseSymMatrix::identity(3)], vec![1.0]).unwrap();
        assert!((p.objective_value(&u, &u).unwrap() - u.norm_sq()).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = SdpProblem::new(SparseSymMatrix::zeros(3), vec![SparseSymMatrix::identity(3)], vec![1.0]).unwrap();
        let u = Factor::zeros(3, 2);
        let v = Factor::zeros(3, 1);
        assert!(matches!(p.apply_a(&u, &v), Err(Error::DimensionMismatch { .. })));
        assert!(p.apply_a_adjoint_times(&[1.0, 2.0], &u).is_err());
        assert!(SdpProblem::new(SparseSymMatrix::zeros(3), vec![SparseSymMatrix::identity(2)], vec![1.0]).is_err());
        assert!(SdpProblem::new(SparseSymMatrix::zeros(3), vec![], vec![]).is_err());
    }

    #[test]
    fn class_detection() {
        let n = 3;
        let cons: Vec<_> = (0..n).map(|i| SparseSymMatrix::new(n, [(i, i, 1.0)]).unwrap()).collect();
        let p = SdpProblem::new(SparseSymMatrix::zeros(n), cons.clone(), vec![1.0; n]).unwrap();
        assert_eq!(p.detect_class(), ClassTag::MaxCut);
        let p = SdpProblem::new(SparseSymMatrix::zeros(n), cons, vec![2.0; n]).unwrap();
        assert_eq!(p.detect_class(), ClassTag::Generic);
        let mc = SdpProblem::new(
            SparseSymMatrix::identity(2),
            vec![SparseSymMatrix::new(2, [(0, 1, 1.0)]).unwrap()],
            vec![6.0],
        )
        .unwrap();
        assert_eq!(mc.detect_class(), ClassTag::MatrixCompletion);
    }
}
