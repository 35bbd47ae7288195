//! Two-phase solve: BM warm start, phase switch, split ADMM, recombination
//! and the final report.
//!
//! Multiplier conventions: both phases price constraints as `+lambda^T r`,
//! so the conic dual reported in [`SolveReport::dual`] is `y = -lambda_hat / 2`
//! with `lambda_hat = 2 lambda` the recombined multiplier.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::admm::{run_admm, AdmmSettings, AdmmStop, CgSettings, PenaltySchedule, SplitState, StoppingRule};
use crate::alm::{alm_outer_loop, AlmSettings, AlmStop, BmState};
use crate::diagnostics::{self, sgm, Normalization};
use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::lanczos::largest_eigenvalue;
use crate::problem::{recombine, ClassTag, SdpProblem};
use crate::rank::{escalate, initial_rank, RankMode, RankPolicy, DEFAULT_DIFFICULTY_THRESHOLD, DEFAULT_ESCALATION_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    /// Proximal weight equal to the penalty at the phase switch, then fixed.
    EqualRho,
    /// Proximal weight equal to the warm-start penalty before scaling by `h`.
    WarmStartRho,
    /// `max(1, ||C||_2)`, the spectral norm of the objective.
    ObjectiveNorm,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub stopping: StoppingRule,
    /// Class default (1e-2 for MaxCut, 1e-3 otherwise) when unset.
    pub switch_tol: Option<f64>,
    pub rho_init: f64,
    pub rho_max: f64,
    pub rho_growth: f64,
    pub rho_growth_period: usize,
    /// Class default when unset.
    pub heuristic_factor: Option<f64>,
    pub gamma_rule: GammaRule,
    pub admm_cap: usize,
    pub rank_mode: RankMode,
    pub escalation_factor: f64,
    pub difficulty_threshold: usize,
    pub cg: CgSettings,
    pub lbfgs_memory: usize,
    pub inner_cap: usize,
    pub outer_cap: usize,
    pub inner_tol_init: f64,
    pub inner_tol_factor: f64,
    pub inner_tol_floor: f64,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    /// Overrides automatic class detection.
    pub class_override: Option<ClassTag>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let alm = AlmSettings::default();
        Self {
            epsilon: 1e-5,
            stopping: StoppingRule::PrimalAndStep,
            switch_tol: None,
            rho_init: 1.0,
            rho_max: 5000.0,
            rho_growth: 1.2,
            rho_growth_period: 5,
            heuristic_factor: None,
            gamma_rule: GammaRule::ObjectiveNorm,
            admm_cap: 5000,
            rank_mode: RankMode::LogSmall,
            escalation_factor: DEFAULT_ESCALATION_FACTOR,
            difficulty_threshold: DEFAULT_DIFFICULTY_THRESHOLD,
            cg: CgSettings::default(),
            lbfgs_memory: alm.lbfgs_memory,
            inner_cap: alm.inner_cap,
            outer_cap: alm.outer_cap,
            inner_tol_init: alm.inner_tol_init,
            inner_tol_factor: alm.inner_tol_factor,
            inner_tol_floor: alm.inner_tol_floor,
            seed: 0,
            time_limit: None,
            class_override: None,
        }
    }
}

/// Heuristic factor by class: 10 for MaxCut, 5 for completion problems of
/// order below 20000 and 2.5 above, 1 otherwise.
pub fn default_heuristic_factor(class: ClassTag, n: usize) -> f64 {
    match class {
        ClassTag::MaxCut => 10.0,
        ClassTag::MatrixCompletion if n < 20_000 => 5.0,
        ClassTag::MatrixCompletion => 2.5,
        ClassTag::Generic => 1.0,
    }
}

pub fn default_switch_tol(class: ClassTag) -> f64 {
    match class {
        ClassTag::MaxCut => 1e-2,
        _ => 1e-3,
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("rho_init", self.rho_init),
            ("rho_max", self.rho_max),
            ("cg tolerance", self.cg.tol),
            ("inner_tol_init", self.inner_tol_init),
            ("inner_tol_floor", self.inner_tol_floor),
            ("inner_tol_factor", self.inner_tol_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("switch_tol", self.switch_tol), ("heuristic factor", self.heuristic_factor)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
                }
            }
        }
        if let GammaRule::Fixed(g) = self.gamma_rule {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.rho_growth >= 1.0) || self.rho_growth_period == 0 {
            return Err(Error::InvalidArgument("penalty growth must be >= 1 with a positive period".into()));
        }
        if !(self.escalation_factor > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rank escalation factor must exceed 1, got {}",
                self.escalation_factor
            )));
        }
        if self.difficulty_threshold == 0 || self.inner_cap == 0 || self.lbfgs_memory == 0 {
            return Err(Error::InvalidArgument("iteration caps and memory must be positive".into()));
        }
        if let RankMode::Fixed(0) = self.rank_mode {
            return Err(Error::InvalidArgument("fixed rank must be positive".into()));
        }
        Ok(())
    }

    pub fn class_of(&self, problem: &SdpProblem) -> ClassTag {
        self.class_override.unwrap_or_else(|| match problem.class_tag() {
            ClassTag::Generic => problem.detect_class(),
            tag => tag,
        })
    }

    fn alm_settings(&self, class: ClassTag) -> AlmSettings {
        AlmSettings {
            switch_tol: self.switch_tol.unwrap_or_else(|| default_switch_tol(class)),
            lbfgs_memory: self.lbfgs_memory,
            inner_cap: self.inner_cap,
            outer_cap: self.outer_cap,
            inner_tol_init: self.inner_tol_init,
            inner_tol_factor: self.inner_tol_factor,
            inner_tol_floor: self.inner_tol_floor,
            rho_max: self.rho_max,
        }
    }

    fn admm_settings(&self) -> AdmmSettings {
        AdmmSettings {
            epsilon: self.epsilon,
            stopping: self.stopping,
            iter_cap: self.admm_cap,
            cg: self.cg,
            schedule: PenaltySchedule {
                growth: self.rho_growth,
                period: self.rho_growth_period,
                rho_max: self.rho_max,
            },
        }
    }

    fn rank_policy(&self, problem: &SdpProblem) -> RankPolicy {
        let mut policy = RankPolicy::new(problem.n(), problem.m(), self.rank_mode);
        policy.escalation_factor = self.escalation_factor;
        policy.difficulty_threshold = self.difficulty_threshold;
        policy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    IterCap,
    TimeCap,
    NumericalFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::IterCap => "iter_cap",
            Status::TimeCap => "time_cap",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    /// Failure detail for [`Status::NumericalFailure`].
    pub message: Option<String>,
    pub class: ClassTag,
    /// Objective in the problem's original sense.
    pub objective: f64,
    /// `<C, X>` of the stored minimisation form.
    pub stored_objective: f64,
    pub dual_objective: f64,
    pub p_infeas: f64,
    pub p_infeas_one: f64,
    pub p_infeas_two: f64,
    pub d_infeas: f64,
    pub d_infeas_converged: bool,
    pub pd_gap: f64,
    /// Step term of the split stopping rule at exit.
    pub step_term: f64,
    pub phase1_outer: usize,
    pub phase1_inner_total: usize,
    pub phase2_iters: usize,
    pub cg_total: usize,
    pub cg_avg: f64,
    pub initial_rank: usize,
    pub final_rank: usize,
    pub rho_switch: f64,
    pub gamma: f64,
    pub time_phase1: Duration,
    pub time_phase2: Duration,
    pub time_total: Duration,
    /// Recombined factor `(U + V) / 2`.
    pub factor: Factor,
    /// Conic dual `y`, slack `C - sum_i y_i A_i`.
    pub dual: Vec<f64>,
    /// Split factors at exit.
    pub u: Factor,
    pub v: Factor,
}

impl SolveReport {
    /// All fields except the timings, for reproducibility checks.
    pub fn without_timings(&self) -> SolveReport {
        SolveReport {
            time_phase1: Duration::ZERO,
            time_phase2: Duration::ZERO,
            time_total: Duration::ZERO,
            ..self.clone()
        }
    }
}

/// Phase I output handed to the switch.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub state: BmState,
    pub stop: AlmStop,
    pub initial_rank: usize,
}

/// Runs the warm-start phase including rank escalation.
pub fn warm_start(problem: &SdpProblem, config: &SolverConfig, deadline: Option<Instant>) -> Result<WarmStart> {
    let class = config.class_of(problem);
    let settings = config.alm_settings(class);
    let policy = config.rank_policy(problem);
    let r0 = initial_rank(problem.n(), problem.m(), config.rank_mode);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let r = Factor::random_normal(problem.n(), r0, 1.0 / (r0 as f64).sqrt(), &mut rng);
    let mut state = BmState::new(problem, r, config.rho_init, config.inner_tol_init)?;
    loop {
        let stop = alm_outer_loop(problem, &mut state, &settings, &policy, deadline)?;
        if stop != AlmStop::EscalationRequested {
            return Ok(WarmStart {
                state,
                stop,
                initial_rank: r0,
            });
        }
        let before = state.r.cols();
        state.r = escalate(&state.r, &policy, &mut rng);
        log::info!("rank escalated {before} -> {}", state.r.cols());
    }
}

/// `U = V = R`, `lambda = mu / 2` with `mu` the warm start's KKT
/// multiplier, `rho = h rho_bm`, `gamma` per rule.
pub fn phase_switch(problem: &SdpProblem, bm: &BmState, h: f64, gamma_rule: GammaRule) -> Result<SplitState> {
    let lambda = bm.kkt_multiplier().iter().map(|l| 0.5 * l).collect();
    let rho = h * bm.rho;
    let gamma = match gamma_rule {
        GammaRule::EqualRho => rho,
        GammaRule::WarmStartRho => bm.rho,
        GammaRule::ObjectiveNorm => objective_norm(problem).max(1.0),
        GammaRule::Fixed(g) => g,
    };
    SplitState::new(problem, bm.r.clone(), bm.r.clone(), lambda, rho, gamma)
}

/// Lanczos estimate of `||C||_2` from the extreme eigenvalues of `C`.
pub fn objective_norm(problem: &SdpProblem) -> f64 {
    let c = problem.objective();
    if c.nnz() == 0 {
        return 0.0;
    }
    let opts = diagnostics::lanczos_options(problem.n());
    let top = |sign: f64| {
        largest_eigenvalue(
            problem.n(),
            |x, y| {
                y.iter_mut().for_each(|v| *v = 0.0);
                c.mul_vec_acc(sign, x, y);
            },
            opts,
        )
        .value
    };
    top(1.0).abs().max(top(-1.0).abs())
}

pub fn solve(problem: &SdpProblem, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let class = config.class_of(problem);
    let h = config
        .heuristic_factor
        .unwrap_or_else(|| default_heuristic_factor(class, problem.n()));
    if config.epsilon >= config.alm_settings(class).switch_tol {
        log::warn!("epsilon {} is not below the switching tolerance", config.epsilon);
    }

    let start = Instant::now();
    let deadline = config.time_limit.map(|t| start + t);
    let warm = warm_start(problem, config, deadline)?;
    let time_phase1 = start.elapsed();
    log::info!(
        "warm start: {:?} after {} outer / {} inner iterations at rank {}",
        warm.stop,
        warm.state.outer_iter,
        warm.state.inner_total,
        warm.state.r.cols()
    );

    let mut split = phase_switch(problem, &warm.state, h, config.gamma_rule)?;
    let rho_switch = split.rho;
    let phase2_start = Instant::now();
    let (status, message, iterations, cg_total, step_term) = if warm.stop == AlmStop::TimeLimit {
        (Status::TimeCap, None, 0, 0, f64::NAN)
    } else {
        match run_admm(problem, &mut split, &config.admm_settings(), deadline) {
            Ok(out) => {
                let status = match out.stop {
                    AdmmStop::Converged => Status::Converged,
                    AdmmStop::IterCap => Status::IterCap,
                    AdmmStop::TimeLimit => Status::TimeCap,
                };
                (status, None, out.iterations, out.cg_total, out.last_check.step_term)
            }
            Err(err @ Error::NumericalFailure { .. }) => {
                log::error!("{err}");
                (Status::NumericalFailure, Some(err.to_string()), split.iter, 0, f64::NAN)
            }
            Err(err) => return Err(err),
        }
    };
    let time_phase2 = phase2_start.elapsed();

    let (factor, lambda_hat) = recombine(&split.u, &split.v, &split.lambda)?;
    let dual: Vec<f64> = lambda_hat.iter().map(|l| -0.5 * l).collect();
    let stored_objective = problem.objective_value(&factor, &factor)?;
    let dual_objective: f64 = dual.iter().zip(problem.rhs()).map(|(y, b)| y * b).sum();
    let dual_est = diagnostics::dual_infeasibility_estimate(problem, &dual)?;
    let primal = |norm| diagnostics::primal_infeasibility(problem, &factor, &factor, norm);

    Ok(SolveReport {
        status,
        message,
        class,
        objective: problem.reported_objective(stored_objective),
        stored_objective,
        dual_objective: problem.reported_objective(dual_objective),
        p_infeas: primal(Normalization::InfNorm)?,
        p_infeas_one: primal(Normalization::OneNorm)?,
        p_infeas_two: primal(Normalization::TwoNorm)?,
        d_infeas: dual_est.value,
        d_infeas_converged: dual_est.converged,
        pd_gap: diagnostics::pd_gap_from_values(stored_objective, dual_objective),
        step_term,
        phase1_outer: warm.state.outer_iter,
        phase1_inner_total: warm.state.inner_total,
        phase2_iters: iterations,
        cg_total,
        cg_avg: if iterations > 0 { cg_total as f64 / iterations as f64 } else { 0.0 },
        initial_rank: warm.initial_rank,
        final_rank: split.u.cols(),
        rho_switch,
        gamma: split.gamma,
        time_phase1,
        time_phase2,
        time_total: start.elapsed(),
        factor,
        dual,
        u: split.u,
        v: split.v,
    })
}

/// Outcome of one benchmark entry.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub name: String,
    pub outcome: std::result::Result<SolveReport, String>,
    /// Wall time charged to the entry, failures included.
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    /// Shifted geometric mean of the per-entry times, shift 10.
    pub sgm: f64,
}

pub const SGM_SHIFT: f64 = 10.0;

/// Solves each problem in turn; failures become rows, never aborts.
pub fn run_benchmark<I>(problems: I, config: &SolverConfig) -> Result<BenchSummary>
where
    I: IntoIterator<Item = (String, std::result::Result<SdpProblem, String>)>,
{
    let mut rows = Vec::new();
    for (name, problem) in problems {
        let start = Instant::now();
        let outcome = problem.and_then(|p| solve(&p, config).map_err(|e| e.to_string()));
        let seconds = match &outcome {
            Ok(report) => report.time_total.as_secs_f64(),
            Err(_) => start.elapsed().as_secs_f64(),
        };
        if let Err(e) = &outcome {
            log::error!("{name}: {e}");
        }
        rows.push(BenchRow { name, outcome, seconds });
    }
    let times: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    let sgm = sgm(&times, SGM_SHIFT)?;
    Ok(BenchSummary { rows, sgm })
}
