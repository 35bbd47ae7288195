//! Dense reference computations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use lorank::io::{gen_maxcut, GsetGraph};
use lorank::{Factor, SdpProblem, SparseSymMatrix};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn dense(m: &SparseSymMatrix) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_row_slice(n, n, &m.to_dense())
}

pub fn to_dmatrix(f: &Factor) -> DMatrix<f64> {
    DMatrix::from_row_slice(f.rows(), f.cols(), f.as_slice())
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Factor {
    Factor::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Row-major flattening, matching `Factor` storage.
pub fn vec_rm(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().copied())
}

pub fn unvec_rm(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v.as_slice())
}

fn random_sym<R: Rng>(rng: &mut R, n: usize, nnz: usize) -> SparseSymMatrix {
    let mut seen = std::collections::BTreeMap::new();
    for _ in 0..nnz {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        seen.insert((i.min(j), i.max(j)), rng.random_range(-1.0..1.0));
    }
    SparseSymMatrix::new(n, seen.into_iter().map(|((i, j), v)| (i, j, v))).unwrap()
}

/// Feasible generic SDP: sparse random `C` and `A_i`, a trace constraint
/// first so the feasible set is bounded, `b = A(X0)` for a random PSD `X0`.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SdpProblem {
    assert!(m >= 1);
    let c = random_sym(rng, n, 2 * n);
    let mut cons = vec![SparseSymMatrix::identity(n)];
    for _ in 1..m {
        cons.push(random_sym(rng, n, n.max(3)));
    }
    let x0 = random_factor(rng, n, 2);
    let probe = SdpProblem::new(c.clone(), cons.clone(), vec![0.0; m]).unwrap();
    let b = probe.apply_a(&x0, &x0).unwrap();
    SdpProblem::new(c, cons, b).unwrap()
}

pub fn random_factor<R: Rng>(rng: &mut R, n: usize, r: usize) -> Factor {
    Factor::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn triangle() -> SdpProblem {
    let g = GsetGraph::new(3, vec![(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)]).unwrap();
    gen_maxcut(&g).unwrap()
}

/// Dense `sum_i y_i A_i`.
pub fn dense_adjoint(p: &SdpProblem, y: &[f64]) -> DMatrix<f64> {
    let n = p.n();
    let mut out = DMatrix::zeros(n, n);
    for (a, yi) in p.constraints().iter().zip(y) {
        out += dense(a) * *yi;
    }
    out
}

/// Explicit `nr x nr` matrix `gamma I + rho sum_i vec(A_i W) vec(A_i W)^T`
/// in row-major vectorisation.
pub fn dense_normal_matrix(p: &SdpProblem, w: &Factor, rho: f64, gamma: f64) -> DMatrix<f64> {
    let wd = to_dmatrix(w);
    let nr = w.rows() * w.cols();
    let mut k = DMatrix::identity(nr, nr) * gamma;
    for a in p.constraints() {
        let g = vec_rm(&(dense(a) * &wd));
        k += &g * g.transpose() * rho;
    }
    k
}

/// Augmented Lagrangian evaluated with dense matrices.
pub fn dense_aug_lagrangian(p: &SdpProblem, u: &Factor, v: &Factor, lambda: &[f64], rho: f64, gamma: f64) -> f64 {
    let (ud, vd) = (to_dmatrix(u), to_dmatrix(v));
    let x = &ud * vd.transpose();
    let obj = dense(p.objective()).dot(&x);
    let mut pen = 0.0;
    for ((a, b), l) in p.constraints().iter().zip(p.rhs()).zip(lambda) {
        let r = dense(a).dot(&x) - b;
        pen += l * r + 0.5 * rho * r * r;
    }
    obj + 0.5 * gamma * (&ud - &vd).norm_squared() + pen
}

/// Block-coordinate ("mixing") method for the MaxCut SDP in its stored form
/// `min <C, X>, diag X = 1`, at rank `ceil(sqrt(2n)) + 2`.
///
/// Returns `(primal, dual_bound)` in the reported (maximisation) sense:
/// the primal value of the final unit-row factor and the certified upper
/// bound `-(sum y + n min(0, lambda_min(C - Diag y)))` with
/// `y_i = C_ii - ||g_i||`. The true optimum lies between the two.
pub fn maxcut_mixing_oracle(p: &SdpProblem) -> (f64, f64) {
    let n = p.n();
    let c = dense(p.objective());
    let k = ((2.0 * n as f64).sqrt().ceil() as usize + 2).min(n);
    let mut v = DMatrix::<f64>::from_fn(n, k, |i, j| (((i * 7919 + j * 104729) % 1000) as f64 / 500.0) - 1.0);
    for i in 0..n {
        let nr = v.row(i).norm();
        v.row_mut(i).scale_mut(1.0 / nr);
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, w) in p.objective().entries() {
        if i != j {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
    }
    let neighbour_sum = |v: &DMatrix<f64>, i: usize| {
        let mut g = RowDVector::zeros(k);
        for &(j, w) in &adj[i] {
            g += w * v.row(j);
        }
        g
    };
    for _ in 0..20_000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let g = neighbour_sum(&v, i);
            let ng = g.norm();
            if ng == 0.0 {
                continue;
            }
            let new = -g / ng;
            delta = delta.max((&new - v.row(i)).norm());
            v.row_mut(i).copy_from(&new);
        }
        if delta < 1e-13 {
            break;
        }
    }
    let primal = c.dot(&(&v * v.transpose()));
    let y: Vec<f64> = (0..n).map(|i| c[(i, i)] - neighbour_sum(&v, i).norm()).collect();
    let mut s = c.clone();
    for i in 0..n {
        s[(i, i)] -= y[i];
    }
    let lmin = s.symmetric_eigenvalues().min();
    let lower = y.iter().sum::<f64>() + n as f64 * lmin.min(0.0);
    (-primal, -lower)
}
