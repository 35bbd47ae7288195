//! Solving phase: ADMM on the split problem
//!
//! ```text
//! min <C, U V^T> + gamma/2 ||U - V||_F^2   s.t.  A(U V^T) = b
//! ```
//!
//! Each half-step is a strongly convex quadratic whose normal equations
//! are solved by warm-started CG.

use std::time::Instant;

use crate::cg::{CgOutcome, CgWorkspace, LinearOperator};
use crate::diagnostics::{rhs_norm, Normalization};
use crate::error::{check_dim, Error, Result};
use crate::factor::{norm2, Factor};
use crate::problem::{recombine, SdpProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub u: Factor,
    pub v: Factor,
    pub lambda: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub iter: usize,
    /// `A(U V^T) - b` at the current iterate.
    pub residual_cache: Vec<f64>,
}

impl SplitState {
    pub fn new(problem: &SdpProblem, u: Factor, v: Factor, lambda: Vec<f64>, rho: f64, gamma: f64) -> Result<Self> {
        u.check_same_shape(&v, "split factors")?;
        check_dim("factor rows", problem.n(), u.rows())?;
        check_dim("multipliers", problem.m(), lambda.len())?;
        if u.cols() == 0 || u.cols() > problem.n() {
            return Err(Error::InvalidArgument(format!(
                "rank {} outside [1, {}]",
                u.cols(),
                problem.n()
            )));
        }
        if !(rho > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("rho {rho} and gamma {gamma} must be positive")));
        }
        let residual_cache = problem.residual(&u, &v)?;
        Ok(Self {
            u,
            v,
            lambda,
            rho,
            gamma,
            iter: 0,
            residual_cache,
        })
    }
}

/// `X -> gamma X + rho sum_i <A_i W, X> A_i W`, applied without forming
/// the `nr x nr` matrix.
#[derive(Debug, Clone, Copy)]
pub struct NormalOperator<'a> {
    pub problem: &'a SdpProblem,
    pub w: &'a Factor,
    pub rho: f64,
    pub gamma: f64,
}

impl LinearOperator for NormalOperator<'_> {
    fn apply(&self, x: &Factor, out: &mut Factor) {
        let t: Vec<f64> = self
            .problem
            .constraints()
            .iter()
            .map(|a| self.rho * a.inner_with_factors(x, self.w))
            .collect();
        out.copy_from(x);
        out.scale(self.gamma);
        self.problem.adjoint_times_acc(0.0, &t, self.w, out);
    }
}

pub fn normal_operator_apply(problem: &SdpProblem, w: &Factor, rho: f64, gamma: f64, x: &Factor) -> Result<Factor> {
    check_dim("factor rows", problem.n(), w.rows())?;
    w.check_same_shape(x, "normal operator")?;
    let mut out = Factor::zeros(x.rows(), x.cols());
    NormalOperator { problem, w, rho, gamma }.apply(x, &mut out);
    Ok(out)
}

/// `gamma W - (C + A^*(lambda - rho b)) W`
pub fn subproblem_rhs(problem: &SdpProblem, w: &Factor, lambda: &[f64], rho: f64, gamma: f64) -> Result<Factor> {
    check_dim("factor rows", problem.n(), w.rows())?;
    check_dim("multipliers", problem.m(), lambda.len())?;
    let y: Vec<f64> = lambda.iter().zip(problem.rhs()).map(|(l, b)| -(l - rho * b)).collect();
    let mut out = w.clone();
    out.scale(gamma);
    problem.adjoint_times_acc(-1.0, &y, w, &mut out);
    Ok(out)
}

/// `<C, U V^T> + gamma/2 ||U - V||^2 + lambda^T r + rho/2 ||r||^2` with
/// `r = A(U V^T) - b`.
pub fn aug_lagrangian(problem: &SdpProblem, u: &Factor, v: &Factor, lambda: &[f64], rho: f64, gamma: f64) -> Result<f64> {
    let res = problem.residual(u, v)?;
    check_dim("multipliers", problem.m(), lambda.len())?;
    Ok(aug_lagrangian_with_residual(problem, u, v, lambda, rho, gamma, &res))
}

fn aug_lagrangian_with_residual(
    problem: &SdpProblem,
    u: &Factor,
    v: &Factor,
    lambda: &[f64],
    rho: f64,
    gamma: f64,
    res: &[f64],
) -> f64 {
    let obj = problem.objective().inner_with_factors(u, v);
    let split = 0.5 * gamma * u.sub(v).norm_sq();
    let lin: f64 = lambda.iter().zip(res).map(|(l, r)| l * r).sum();
    obj + split + lin + 0.5 * rho * res.iter().map(|r| r * r).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    pub tol: f64,
    /// Defaults to `min(n r, 1000)` when unset.
    pub max_iter: Option<usize>,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
        }
    }
}

impl CgSettings {
    pub fn max_iter_for(&self, n: usize, r: usize) -> usize {
        self.max_iter.unwrap_or((n * r).min(1000)).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepDiagnostics {
    pub delta_u: f64,
    pub delta_v: f64,
    pub delta_lambda: f64,
    pub cg_u: CgOutcome,
    pub cg_v: CgOutcome,
    /// Merit at `(U^k, V^k, lambda^k)`.
    pub lagrangian_start: f64,
    /// Merit at `(U^{k+1}, V^{k+1}, lambda^k)`.
    pub lagrangian_primal: f64,
    /// Merit at `(U^{k+1}, V^{k+1}, lambda^{k+1})`.
    pub lagrangian_dual: f64,
    /// `||V^k||_F`, for the step-size term of the stopping rule.
    pub prev_v_norm: f64,
}

impl SweepDiagnostics {
    pub fn cg_iterations(&self) -> usize {
        self.cg_u.iterations + self.cg_v.iterations
    }
}

/// One U-step, V-step and multiplier step. `rho` and `gamma` are left
/// alone; see [`penalty_schedule`].
pub fn admm_sweep(
    problem: &SdpProblem,
    state: &mut SplitState,
    cg: &CgSettings,
    ws: &mut CgWorkspace,
) -> Result<SweepDiagnostics> {
    let (rho, gamma) = (state.rho, state.gamma);
    let max_iter = cg.max_iter_for(problem.n(), state.u.cols());
    let lagrangian_start =
        aug_lagrangian_with_residual(problem, &state.u, &state.v, &state.lambda, rho, gamma, &state.residual_cache);
    let prev_v_norm = state.v.norm();

    let rhs = subproblem_rhs(problem, &state.v, &state.lambda, rho, gamma)?;
    let old_u = state.u.clone();
    let op = NormalOperator {
        problem,
        w: &state.v,
        rho,
        gamma,
    };
    let cg_u = ws.solve(&op, &rhs, &mut state.u, cg.tol, max_iter).map_err(|e| at_iteration(e, state.iter))?;

    let rhs = subproblem_rhs(problem, &state.u, &state.lambda, rho, gamma)?;
    let old_v = state.v.clone();
    let op = NormalOperator {
        problem,
        w: &state.u,
        rho,
        gamma,
    };
    let cg_v = ws.solve(&op, &rhs, &mut state.v, cg.tol, max_iter).map_err(|e| at_iteration(e, state.iter))?;
    if !cg_u.converged || !cg_v.converged {
        log::debug!("admm {}: CG stopped at its iteration cap", state.iter);
    }

    let res = problem.residual(&state.u, &state.v)?;
    let lagrangian_primal = aug_lagrangian_with_residual(problem, &state.u, &state.v, &state.lambda, rho, gamma, &res);
    for (l, r) in state.lambda.iter_mut().zip(&res) {
        *l += rho * r;
    }
    let lagrangian_dual = aug_lagrangian_with_residual(problem, &state.u, &state.v, &state.lambda, rho, gamma, &res);
    let delta_lambda = rho * norm2(&res);
    state.residual_cache = res;
    state.iter += 1;

    if !state.u.is_finite() || !state.v.is_finite() {
        return Err(Error::NumericalFailure {
            phase: "admm",
            iteration: state.iter,
            message: "non-finite iterate".into(),
        });
    }

    Ok(SweepDiagnostics {
        delta_u: state.u.sub(&old_u).norm(),
        delta_v: state.v.sub(&old_v).norm(),
        delta_lambda,
        cg_u,
        cg_v,
        lagrangian_start,
        lagrangian_primal,
        lagrangian_dual,
        prev_v_norm,
    })
}

fn at_iteration(err: Error, iter: usize) -> Error {
    match err {
        Error::NumericalFailure { message, iteration, .. } => Error::NumericalFailure {
            phase: "admm",
            iteration: iter,
            message: format!("{message} (CG iteration {iteration})"),
        },
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySchedule {
    pub growth: f64,
    pub period: usize,
    pub rho_max: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self {
            growth: 1.2,
            period: 5,
            rho_max: 5000.0,
        }
    }
}

/// Penalty after sweep `iter` (1-based): grows by `growth` every `period`
/// sweeps, capped at `rho_max`. A penalty already above the cap is kept.
pub fn penalty_schedule(rho: f64, iter: usize, schedule: &PenaltySchedule) -> f64 {
    if iter > 0 && iter.is_multiple_of(schedule.period) && rho < schedule.rho_max {
        (schedule.growth * rho).min(schedule.rho_max)
    } else {
        rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationCheck {
    /// `||A(U V^T) - b||_2 / (1 + ||b||_inf)`
    pub primal_infeas: f64,
    /// `gamma ||V^{k+1} - V^k||_F / (1 + ||V^k||_F)`
    pub step_term: f64,
    pub converged: bool,
}

/// Primal criterion decides; the step term is computed for logging.
pub fn check_termination(problem: &SdpProblem, state: &SplitState, prev_v: &Factor, epsilon: f64) -> TerminationCheck {
    let step_term = state.gamma * state.v.sub(prev_v).norm() / (1.0 + prev_v.norm());
    termination_from(problem, state, step_term, epsilon)
}

fn termination_from(problem: &SdpProblem, state: &SplitState, step_term: f64, epsilon: f64) -> TerminationCheck {
    termination_with(problem, state, step_term, epsilon, StoppingRule::Primal)
}

fn termination_with(
    problem: &SdpProblem,
    state: &SplitState,
    step_term: f64,
    epsilon: f64,
    rule: StoppingRule,
) -> TerminationCheck {
    let primal_infeas =
        norm2(&state.residual_cache) / (1.0 + rhs_norm(problem.rhs(), Normalization::InfNorm));
    TerminationCheck {
        primal_infeas,
        step_term,
        converged: primal_infeas <= epsilon && (rule == StoppingRule::Primal || step_term <= epsilon),
    }
}

/// Which terms of the stopping test must fall below `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingRule {
    /// Primal infeasibility only.
    Primal,
    /// Primal infeasibility and the step term.
    PrimalAndStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmSettings {
    pub epsilon: f64,
    pub stopping: StoppingRule,
    pub iter_cap: usize,
    pub cg: CgSettings,
    pub schedule: PenaltySchedule,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            stopping: StoppingRule::PrimalAndStep,
            iter_cap: 5000,
            cg: CgSettings::default(),
            schedule: PenaltySchedule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmmStop {
    Converged,
    IterCap,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOutcome {
    pub stop: AdmmStop,
    pub iterations: usize,
    pub cg_total: usize,
    pub last_check: TerminationCheck,
}

/// Primal infeasibility of the recombined factor `(U + V) / 2`.
fn recombined_infeasibility(problem: &SdpProblem, state: &SplitState) -> Result<f64> {
    let (hat, _) = recombine(&state.u, &state.v, &state.lambda)?;
    let res = problem.residual(&hat, &hat)?;
    Ok(norm2(&res) / (1.0 + rhs_norm(problem.rhs(), Normalization::InfNorm)))
}

/// Sweeps until the primal criterion holds at both `U V^T` and the
/// recombined point, or a cap is reached. The penalty follows
/// [`penalty_schedule`]; `gamma` stays fixed.
pub fn run_admm(
    problem: &SdpProblem,
    state: &mut SplitState,
    settings: &AdmmSettings,
    deadline: Option<Instant>,
) -> Result<AdmmOutcome> {
    let mut ws = CgWorkspace::new(state.u.rows(), state.u.cols());
    let mut cg_total = 0;
    let mut iterations = 0;
    // the step term is undefined before the first sweep
    let initial_step = match settings.stopping {
        StoppingRule::Primal => 0.0,
        StoppingRule::PrimalAndStep => f64::INFINITY,
    };
    let mut check = termination_with(problem, state, initial_step, settings.epsilon, settings.stopping);
    loop {
        if check.converged && recombined_infeasibility(problem, state)? <= settings.epsilon {
            return Ok(AdmmOutcome {
                stop: AdmmStop::Converged,
                iterations,
                cg_total,
                last_check: check,
            });
        }
        if iterations >= settings.iter_cap {
            return Ok(AdmmOutcome {
                stop: AdmmStop::IterCap,
                iterations,
                cg_total,
                last_check: check,
            });
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(AdmmOutcome {
                stop: AdmmStop::TimeLimit,
                iterations,
                cg_total,
                last_check: check,
            });
        }

        let diag = admm_sweep(problem, state, &settings.cg, &mut ws)?;
        iterations += 1;
        cg_total += diag.cg_iterations();
        let step_term = state.gamma * diag.delta_v / (1.0 + diag.prev_v_norm);
        check = termination_with(problem, state, step_term, settings.epsilon, settings.stopping);
        state.rho = penalty_schedule(state.rho, state.iter, &settings.schedule);
        log::debug!(
            "admm {:>5}  infeas {:.3e}  step {:.3e}  cg {:>3}+{:<3}  rho {:.3e}",
            state.iter,
            check.primal_infeas,
            check.step_term,
            diag.cg_u.iterations,
            diag.cg_v.iterations,
            state.rho
        );
    }
}
