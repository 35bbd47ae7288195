//! Warm-start phase: augmented Lagrangian on `X = R R^T` with an L-BFGS
//! inner solver.

use std::collections::VecDeque;
use std::time::Instant;

use crate::diagnostics::{rhs_norm, Normalization};
use crate::error::{check_dim, Result};
use crate::factor::{norm2, Factor};
use crate::problem::SdpProblem;
use crate::rank::{should_escalate, RankPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct BmState {
    pub r: Factor,
    pub lambda: Vec<f64>,
    pub rho: f64,
    /// Inner iterations used by the latest subproblem.
    pub inner_iter_count: usize,
    pub inner_total: usize,
    pub outer_iter: usize,
    pub inner_tol: f64,
    /// Primal infeasibility after the previous outer iteration.
    pub prev_infeas: Option<f64>,
}

impl BmState {
    /// Multiplier in the stationarity form `2 C R + sum_i mu_i A_i R = 0`,
    /// which is twice the Lagrangian multiplier `lambda`.
    pub fn kkt_multiplier(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| 2.0 * l).collect()
    }

    pub fn new(problem: &SdpProblem, r: Factor, rho: f64, inner_tol: f64) -> Result<Self> {
        check_dim("factor rows", problem.n(), r.rows())?;
        if !(rho > 0.0) || !(inner_tol > 0.0) {
            return Err(crate::Error::InvalidArgument(format!(
                "penalty {rho} and inner tolerance {inner_tol} must be positive"
            )));
        }
        Ok(Self {
            r,
            lambda: vec![0.0; problem.m()],
            rho,
            inner_iter_count: 0,
            inner_total: 0,
            outer_iter: 0,
            inner_tol,
            prev_infeas: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmSettings {
    pub switch_tol: f64,
    pub lbfgs_memory: usize,
    /// Inner L-BFGS iterations per outer subproblem.
    pub inner_cap: usize,
    pub outer_cap: usize,
    pub inner_tol_init: f64,
    pub inner_tol_factor: f64,
    pub inner_tol_floor: f64,
    pub rho_max: f64,
}

impl Default for AlmSettings {
    fn default() -> Self {
        Self {
            switch_tol: 1e-3,
            lbfgs_memory: 10,
            inner_cap: 200,
            outer_cap: 100,
            inner_tol_init: 1e-1,
            inner_tol_factor: 0.9,
            inner_tol_floor: 1e-4,
            rho_max: 5000.0,
        }
    }
}

/// `<C, R R^T> + lambda^T res + rho/2 ||res||^2` given the residual.
fn merit(problem: &SdpProblem, r: &Factor, lambda: &[f64], rho: f64, res: &[f64]) -> f64 {
    let obj = problem.objective().inner_with_factors(r, r);
    let lin: f64 = lambda.iter().zip(res).map(|(l, v)| l * v).sum();
    obj + lin + 0.5 * rho * res.iter().map(|v| v * v).sum::<f64>()
}

fn residual_of(problem: &SdpProblem, r: &Factor) -> Vec<f64> {
    let mut res = problem.apply_a_unchecked(r, r);
    for (v, b) in res.iter_mut().zip(problem.rhs()) {
        *v -= b;
    }
    res
}

/// `2 (C + A^*(lambda + rho res)) R`
fn gradient_from_residual(problem: &SdpProblem, r: &Factor, lambda: &[f64], rho: f64, res: &[f64]) -> Factor {
    let y: Vec<f64> = lambda.iter().zip(res).map(|(l, v)| l + rho * v).collect();
    let mut g = Factor::zeros(r.rows(), r.cols());
    problem.adjoint_times_acc(1.0, &y, r, &mut g);
    g.scale(2.0);
    g
}

fn check_state(problem: &SdpProblem, state: &BmState) -> Result<()> {
    check_dim("factor rows", problem.n(), state.r.rows())?;
    check_dim("multipliers", problem.m(), state.lambda.len())
}

pub fn bm_aug_lagrangian(problem: &SdpProblem, state: &BmState) -> Result<f64> {
    check_state(problem, state)?;
    let res = residual_of(problem, &state.r);
    Ok(merit(problem, &state.r, &state.lambda, state.rho, &res))
}

pub fn bm_gradient(problem: &SdpProblem, state: &BmState) -> Result<Factor> {
    check_state(problem, state)?;
    let res = residual_of(problem, &state.r);
    Ok(gradient_from_residual(problem, &state.r, &state.lambda, state.rho, &res))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failed: bool,
    /// `||grad||_F / (1 + ||C||_F)` at exit.
    pub scaled_grad_norm: f64,
    pub value: f64,
}

const ARMIJO_C1: f64 = 1e-4;
const STEP_SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;
const CURVATURE_EPS: f64 = 1e-12;

/// Minimises the BM augmented Lagrangian over `state.r` with `lambda` and
/// `rho` frozen. Stops once `||grad||_F / (1 + ||C||_F) <= tol` or after
/// `max_inner` iterations. The merit value itself is a poor scale: early
/// on it is dominated by the penalty term and would accept any point.
pub fn lbfgs_minimize(
    problem: &SdpProblem,
    state: &mut BmState,
    tol: f64,
    max_inner: usize,
    memory: usize,
) -> Result<LbfgsOutcome> {
    check_state(problem, state)?;
    if !(tol > 0.0) {
        return Err(crate::Error::InvalidArgument(format!("inner tolerance must be positive, got {tol}")));
    }
    let memory = memory.max(1);
    let lambda = state.lambda.clone();
    let rho = state.rho;

    let res = residual_of(problem, &state.r);
    let mut value = merit(problem, &state.r, &lambda, rho, &res);
    let mut grad = gradient_from_residual(problem, &state.r, &lambda, rho, &res);
    let mut pairs: VecDeque<(Factor, Factor, f64)> = VecDeque::with_capacity(memory);
    let mut trial = state.r.clone();

    let grad_scale = 1.0 + problem.objective().frobenius_norm_sq().sqrt();
    let mut iterations = 0;
    loop {
        let scaled = grad.norm() / grad_scale;
        if scaled <= tol {
            return Ok(LbfgsOutcome {
                iterations,
                converged: true,
                line_search_failed: false,
                scaled_grad_norm: scaled,
                value,
            });
        }
        if iterations >= max_inner {
            return Ok(LbfgsOutcome {
                iterations,
                converged: false,
                line_search_failed: false,
                scaled_grad_norm: scaled,
                value,
            });
        }

        let mut dir = two_loop(&grad, &pairs);
        let mut slope = dir.dot(&grad);
        if !(slope < 0.0) {
            // memory produced an ascent direction; restart from steepest descent
            pairs.clear();
            dir = two_loop(&grad, &pairs);
            slope = dir.dot(&grad);
        }

        let mut step = 1.0;
        let accepted = loop {
            trial.copy_from(&state.r);
            trial.axpy(step, &dir);
            let trial_res = residual_of(problem, &trial);
            let trial_value = merit(problem, &trial, &lambda, rho, &trial_res);
            if trial_value <= value + ARMIJO_C1 * step * slope {
                break Some((trial_res, trial_value));
            }
            step *= STEP_SHRINK;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((trial_res, trial_value)) = accepted else {
            log::debug!("line search underflow after {iterations} inner iterations");
            return Ok(LbfgsOutcome {
                iterations,
                converged: false,
                line_search_failed: true,
                scaled_grad_norm: scaled,
                value,
            });
        };
        iterations += 1;

        let new_grad = gradient_from_residual(problem, &trial, &lambda, rho, &trial_res);
        let s = trial.sub(&state.r);
        let y = new_grad.sub(&grad);
        let sy = s.dot(&y);
        if sy > CURVATURE_EPS * s.norm() * y.norm() {
            if pairs.len() == memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut state.r, &mut trial);
        value = trial_value;
        grad = new_grad;
    }
}

/// Two-loop recursion for `-H grad`. With no stored pairs the first step
/// is steepest descent scaled to unit length when the gradient is large.
fn two_loop(grad: &Factor, pairs: &VecDeque<(Factor, Factor, f64)>) -> Factor {
    let mut q = grad.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y);
        alphas.push(a);
    }
    let h0 = match pairs.back() {
        Some((s, y, _)) => s.dot(y) / y.norm_sq(),
        None => (1.0 / grad.norm()).min(1.0),
    };
    q.scale(h0);
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s);
    }
    q.scale(-1.0);
    q
}

/// `lambda += rho * (A(R R^T) - b)`; returns the residual used.
pub fn dual_update(problem: &SdpProblem, state: &mut BmState) -> Result<Vec<f64>> {
    check_state(problem, state)?;
    let res = residual_of(problem, &state.r);
    for (l, v) in state.lambda.iter_mut().zip(&res) {
        *l += state.rho * v;
    }
    Ok(res)
}

/// `||A(R R^T) - b||_2 / (1 + ||b||_inf)`
pub fn bm_infeasibility(problem: &SdpProblem, r: &Factor) -> f64 {
    norm2(&residual_of(problem, r)) / (1.0 + rhs_norm(problem.rhs(), Normalization::InfNorm))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlmStop {
    Converged,
    EscalationRequested,
    OuterCap,
    TimeLimit,
}

/// Runs outer iterations until the switching tolerance is met, the latest
/// subproblem signals that the rank should grow, or a cap is hit. The
/// state may be re-entered after escalation; `lambda`, `rho` and the
/// counters carry over.
pub fn alm_outer_loop(
    problem: &SdpProblem,
    state: &mut BmState,
    settings: &AlmSettings,
    policy: &RankPolicy,
    deadline: Option<Instant>,
) -> Result<AlmStop> {
    check_state(problem, state)?;
    loop {
        let infeas = bm_infeasibility(problem, &state.r);
        if infeas < settings.switch_tol {
            return Ok(AlmStop::Converged);
        }
        if state.outer_iter >= settings.outer_cap {
            return Ok(AlmStop::OuterCap);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(AlmStop::TimeLimit);
        }

        let out = lbfgs_minimize(problem, state, state.inner_tol, settings.inner_cap, settings.lbfgs_memory)?;
        state.inner_iter_count = out.iterations;
        state.inner_total += out.iterations;

        let res = dual_update(problem, state)?;
        let infeas = norm2(&res) / (1.0 + rhs_norm(problem.rhs(), Normalization::InfNorm));
        if state.prev_infeas.is_some_and(|prev| infeas > 0.9 * prev) {
            state.rho = (2.0 * state.rho).min(settings.rho_max);
        }
        state.prev_infeas = Some(infeas);
        state.inner_tol = (state.inner_tol * settings.inner_tol_factor).max(settings.inner_tol_floor);
        state.outer_iter += 1;
        log::debug!(
            "alm outer {:>4}  infeas {:.3e}  inner {:>4}  rho {:.3e}  rank {}",
            state.outer_iter,
            infeas,
            out.iterations,
            state.rho,
            state.r.cols()
        );

        if infeas < settings.switch_tol {
            return Ok(AlmStop::Converged);
        }
        if should_escalate(out.iterations, policy) && state.r.cols() < policy.rank_cap {
            return Ok(AlmStop::EscalationRequested);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::SparseSymMatrix;

    fn col(vals: &[f64]) -> Factor {
        Factor::from_row_major(vals.len(), 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn zero_point_has_zero_merit() {
        let p = SdpProblem::new(SparseSymMatrix::identity(2), vec![SparseSymMatrix::identity(2)], vec![0.0]).unwrap();
        let s = BmState::new(&p, Factor::zeros(2, 1), 1.0, 0.1).unwrap();
        assert_eq!(bm_aug_lagrangian(&p, &s).unwrap(), 0.0);
    }

    #[test]
    fn trace_constraint_gradient_closed_form() {
        let p = SdpProblem::new(SparseSymMatrix::identity(2), vec![SparseSymMatrix::identity(2)], vec![1.0]).unwrap();
        let r = col(&[0.6, -1.1]);
        let s = BmState::new(&p, r.clone(), 1.0, 0.1).unwrap();
        let g = bm_gradient(&p, &s).unwrap();
        let nsq = r.norm_sq();
        for k in 0..2 {
            let expect = 2.0 * (1.0 + (nsq - 1.0)) * r.get(k, 0);
            assert!((g.get(k, 0) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_without_constraints_goes_to_origin() {
        // constraint weight is zero, so only <C, R R^T> with C > 0 remains
        let c = SparseSymMatrix::new(3, [(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]).unwrap();
        let p = SdpProblem::new(c, vec![SparseSymMatrix::zeros(3)], vec![0.0]).unwrap();
        let r = Factor::from_fn(3, 1, |i, _| 0.1 * (i as f64 + 1.0));
        let mut s = BmState::new(&p, r, 1.0, 0.1).unwrap();
        let out = lbfgs_minimize(&p, &mut s, 1e-10, 10, 10).unwrap();
        assert!(out.converged, "{out:?}");
        assert!(s.r.norm() < 1e-5);
    }

    #[test]
    fn dual_update_is_exact() {
        let c = SparseSymMatrix::zeros(2);
        let p = SdpProblem::new(c, vec![SparseSymMatrix::identity(2)], vec![1.0]).unwrap();
        let mut s = BmState::new(&p, col(&[1.0, 1.0]), 1.0, 0.1).unwrap();
        s.lambda = vec![0.25];
        let res = dual_update(&p, &mut s).unwrap();
        assert_eq!(res, vec![1.0]);
        assert_eq!(s.lambda, vec![1.25]);
    }

    #[test]
    fn feasible_start_needs_no_outer_iterations() {
        let p = SdpProblem::new(SparseSymMatrix::zeros(2), vec![SparseSymMatrix::identity(2)], vec![1.0]).unwrap();
        let mut s = BmState::new(&p, col(&[0.6, 0.8]), 1.0, 0.1).unwrap();
        let policy = RankPolicy::new(2, 1, crate::rank::RankMode::LogSmall);
        let stop = alm_outer_loop(&p, &mut s, &AlmSettings::default(), &policy, None).unwrap();
        assert_eq!(stop, AlmStop::Converged);
        assert_eq!(s.outer_iter, 0);
    }
}
