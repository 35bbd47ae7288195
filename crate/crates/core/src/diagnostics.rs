//! Standardised KKT error measures and the shifted geometric mean.
//!
//! The dual vector `y` taken here follows the conic convention: the slack
//! is `S = C - sum_i y_i A_i` and the dual objective is `b^T y`. The
//! multiplier of the augmented Lagrangian enters with the opposite sign,
//! see [`crate::driver`].

use crate::error::{check_dim, Error, Result};
use crate::factor::{norm2, Factor};
use crate::lanczos::{largest_eigenvalue, LanczosOptions};
use crate::problem::SdpProblem;

/// Which norm of `b` enters the primal infeasibility denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `1 + ||b||_inf`, the termination measure.
    InfNorm,
    /// `1 + ||b||_1`, the cross-solver reporting measure.
    OneNorm,
    /// `1 + ||b||_2`.
    TwoNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTriple {
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub pd_gap: f64,
}

pub fn rhs_norm(b: &[f64], norm: Normalization) -> f64 {
    match norm {
        Normalization::InfNorm => b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
        Normalization::OneNorm => b.iter().map(|v| v.abs()).sum(),
        Normalization::TwoNorm => norm2(b),
    }
}

/// `||A(U V^T) - b||_2 / (1 + ||b||)` for the selected norm.
pub fn primal_infeasibility(problem: &SdpProblem, u: &Factor, v: &Factor, norm: Normalization) -> Result<f64> {
    let r = problem.residual(u, v)?;
    Ok(norm2(&r) / (1.0 + rhs_norm(problem.rhs(), norm)))
}

/// Lanczos estimate of `lambda_min(C - A^*(y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEstimate {
    pub value: f64,
    pub min_eigenvalue: f64,
    /// False when Lanczos hit its iteration cap; `min_eigenvalue` is then
    /// the best Ritz value and only an upper bound.
    pub converged: bool,
}

/// At most `ceil(5 sqrt(n))` iterations, never more than `n`.
pub fn lanczos_options(n: usize) -> LanczosOptions {
    let sqrt_cap = (5.0 * (n as f64).sqrt()).ceil() as usize;
    LanczosOptions {
        max_iter: n.min(sqrt_cap),
        tol: 1e-9,
        seed: 0x5eed,
    }
}

/// `|min(0, lambda_min(C - A^*(y)))| / (1 + ||vec(C)||_1)`.
pub fn dual_infeasibility_estimate(problem: &SdpProblem, y: &[f64]) -> Result<DualEstimate> {
    check_dim("dual vector", problem.m(), y.len())?;
    let n = problem.n();
    // Lanczos on -(C - A^*(y)) for its largest eigenvalue.
    let est = largest_eigenvalue(
        n,
        |x, out| {
            out.iter_mut().for_each(|v| *v = 0.0);
            problem.adjoint_vec_acc(-1.0, y, x, out);
        },
        lanczos_options(n),
    );
    let min_eig = -est.value;
    if !est.converged {
        log::warn!(
            "Lanczos stopped after {} iterations with residual bound {:.2e}",
            est.iterations,
            est.residual_bound
        );
    }
    let denom = 1.0 + problem.objective().flat_l1_norm();
    Ok(DualEstimate {
        value: min_eig.min(0.0).abs() / denom,
        min_eigenvalue: min_eig,
        converged: est.converged,
    })
}

pub fn dual_infeasibility(problem: &SdpProblem, y: &[f64]) -> Result<f64> {
    Ok(dual_infeasibility_estimate(problem, y)?.value)
}

/// `(<C, X> - y^T b) / (1 + |<C, X>| + |y^T b|)` with `X = U V^T`.
pub fn pd_gap(problem: &SdpProblem, u: &Factor, v: &Factor, y: &[f64]) -> Result<f64> {
    check_dim("dual vector", problem.m(), y.len())?;
    let primal = problem.objective_value(u, v)?;
    let dual: f64 = y.iter().zip(problem.rhs()).map(|(a, b)| a * b).sum();
    Ok(pd_gap_from_values(primal, dual))
}

pub fn pd_gap_from_values(primal: f64, dual: f64) -> f64 {
    (primal - dual) / (1.0 + primal.abs() + dual.abs())
}

/// Shifted geometric mean `exp(mean(ln(max(1, t_i + s)))) - s`.
pub fn sgm(times: &[f64], shift: f64) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::EmptyInput("shifted geometric mean of no samples"));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative or NaN time {t}")));
    }
    // logs are taken relative to the first sample so equal samples
    // reproduce themselves exactly
    let shifted: Vec<f64> = times.iter().map(|t| (t + shift).max(1.0)).collect();
    let base = shifted[0];
    let mean_log = shifted.iter().map(|v| (v / base).ln()).sum::<f64>() / shifted.len() as f64;
    Ok(base * mean_log.exp() - shift)
}

/// Each value divided by the smallest one.
pub fn ssgm(sgms: &[f64]) -> Result<Vec<f64>> {
    let min = sgms.iter().copied().fold(f64::INFINITY, f64::min);
    if sgms.is_empty() {
        return Err(Error::EmptyInput("scaled shifted geometric mean of no solvers"));
    }
    if !(min > 0.0) {
        return Err(Error::InvalidArgument("cannot scale by a non-positive SGM".into()));
    }
    Ok(sgms.iter().map(|v| v / min).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::SparseSymMatrix;

    fn diag_problem() -> SdpProblem {
        // C = diag(1, 2), constraints pick each diagonal entry
        let c = SparseSymMatrix::new(2, [(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let a0 = SparseSymMatrix::new(2, [(0, 0, 1.0)]).unwrap();
        let a1 = SparseSymMatrix::new(2, [(1, 1, 1.0)]).unwrap();
        SdpProblem::new(c, vec![a0, a1], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn primal_examples() {
        let p = diag_problem();
        let u = Factor::zeros(2, 1);
        assert_eq!(primal_infeasibility(&p, &u, &u, Normalization::InfNorm).unwrap(), 0.0);
        let u = Factor::from_row_major(2, 1, vec![1.0, 0.0]).unwrap();
        // b = 0 so the residual norm is returned unchanged
        assert_eq!(primal_infeasibility(&p, &u, &u, Normalization::OneNorm).unwrap(), 1.0);
    }

    #[test]
    fn inf_normalisation_dominates_one_norm() {
        let c = SparseSymMatrix::zeros(2);
        let cons = vec![SparseSymMatrix::new(2, [(0, 0, 1.0)]).unwrap(), SparseSymMatrix::new(2, [(1, 1, 1.0)]).unwrap()];
        let p = SdpProblem::new(c, cons, vec![2.0, -3.0]).unwrap();
        let u = Factor::from_row_major(2, 1, vec![0.5, 0.1]).unwrap();
        let inf = primal_infeasibility(&p, &u, &u, Normalization::InfNorm).unwrap();
        let one = primal_infeasibility(&p, &u, &u, Normalization::OneNorm).unwrap();
        let two = primal_infeasibility(&p, &u, &u, Normalization::TwoNorm).unwrap();
        assert!(inf >= two && two >= one);
    }

    #[test]
    fn dual_examples() {
        let p = SdpProblem::new(SparseSymMatrix::identity(3), vec![SparseSymMatrix::identity(3)], vec![1.0]).unwrap();
        assert_eq!(dual_infeasibility(&p, &[0.0]).unwrap(), 0.0);

        // slack = diag(1,2) - diag(y0, y1) = diag(-1, 3) with y = (2, -1)
        let p = diag_problem();
        let est = dual_infeasibility_estimate(&p, &[2.0, -1.0]).unwrap();
        assert!((est.min_eigenvalue + 1.0).abs() < 1e-12);
        assert!((est.value - 1.0 / (1.0 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(pd_gap_from_values(1.5, 1.5), 0.0);
        assert_eq!(pd_gap_from_values(3.0, 1.0), 2.0 / 5.0);
    }

    #[test]
    fn sgm_examples() {
        assert_eq!(sgm(&[0.0, 0.0], 10.0).unwrap(), 0.0);
        let v = sgm(&[2.0, 8.0], 10.0).unwrap();
        assert!((v - ((12.0_f64 * 18.0).sqrt() - 10.0)).abs() < 1e-12);
        assert!((sgm(&[3.25], 10.0).unwrap() - 3.25).abs() < 1e-12);
        assert!(sgm(&[], 10.0).is_err());
        assert!(sgm(&[-1.0], 10.0).is_err());
        assert_eq!(ssgm(&[2.0, 4.0, 3.0]).unwrap(), vec![1.0, 2.0, 1.5]);
    }
}
