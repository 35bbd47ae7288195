//! Lanczos iteration with full reorthogonalisation for one extremal
//! eigenvalue of a symmetric operator given only through matrix-vector
//! products.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::factor::{axpy_slice, dot, norm2};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosEstimate {
    pub value: f64,
    /// Residual bound `|beta_k * s_k|` of the returned Ritz pair.
    pub residual_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of the `n x n` symmetric operator `op(x, y)`, which
/// must overwrite `y` with the product.
pub fn largest_eigenvalue<F>(n: usize, op: F, opts: LanczosOptions) -> LanczosEstimate
where
    F: Fn(&[f64], &mut [f64]),
{
    assert!(n > 0, "empty operator");
    let max_iter = opts.max_iter.clamp(1, n);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nq = norm2(&q);
    q.iter_mut().for_each(|v| *v /= nq);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_iter);
    let mut alpha = Vec::with_capacity(max_iter);
    let mut beta: Vec<f64> = Vec::with_capacity(max_iter);
    let mut w = vec![0.0; n];
    let mut best = LanczosEstimate {
        value: f64::NEG_INFINITY,
        residual_bound: f64::INFINITY,
        iterations: 0,
        converged: false,
    };

    for k in 0..max_iter {
        op(&q, &mut w);
        let a = dot(&q, &w);
        axpy_slice(-a, &q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy_slice(-b, prev, &mut w);
        }
        basis.push(q.clone());
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy_slice(-c, v, &mut w);
            }
        }
        let b = norm2(&w);

        let (theta, last) = ritz_largest(&alpha, &beta);
        let bound = (b * last).abs();
        best = LanczosEstimate {
            value: theta,
            residual_bound: bound,
            iterations: k + 1,
            converged: false,
        };
        let scale = theta.abs().max(1.0);
        if bound <= opts.tol * scale || b <= 1e-14 * scale || k + 1 == n {
            best.converged = true;
            break;
        }
        beta.push(b);
        q.iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi / b);
    }
    best
}

/// Largest eigenvalue of the tridiagonal matrix and the last component of
/// its eigenvector.
fn ritz_largest(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    (theta, eig.eigenvectors[(k - 1, idx)])
}
