//! Factor rank selection: logarithmic initial rank, `sqrt(2m)` fallback,
//! and multiplicative escalation while the warm-start phase struggles.

use rand::Rng;

use crate::factor::Factor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    /// `round(2 ln m)`
    LogSmall,
    /// `round(ln m)`, for very large completion instances
    LogLarge,
    /// `round(sqrt(2 m))`
    Sqrt2m,
    Fixed(usize),
}

impl std::str::FromStr for RankMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" => Ok(RankMode::LogSmall),
            "log-large" => Ok(RankMode::LogLarge),
            "sqrt2m" => Ok(RankMode::Sqrt2m),
            other => other
                .parse::<usize>()
                .ok()
                .filter(|&r| r > 0)
                .map(RankMode::Fixed)
                .ok_or_else(|| format!("unknown rank mode `{other}` (log, log-large, sqrt2m or a positive integer)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankPolicy {
    pub mode: RankMode,
    pub escalation_factor: f64,
    /// Inner-iteration count at which a subproblem counts as difficult.
    pub difficulty_threshold: usize,
    pub rank_cap: usize,
}

pub const DEFAULT_ESCALATION_FACTOR: f64 = 1.5;
pub const DEFAULT_DIFFICULTY_THRESHOLD: usize = 200;

impl RankPolicy {
    /// Policy with default escalation settings and cap `min(n, round(sqrt(2m)))`.
    pub fn new(n: usize, m: usize, mode: RankMode) -> Self {
        Self {
            mode,
            escalation_factor: DEFAULT_ESCALATION_FACTOR,
            difficulty_threshold: DEFAULT_DIFFICULTY_THRESHOLD,
            rank_cap: rank_cap(n, m),
        }
    }
}

pub fn rank_cap(n: usize, m: usize) -> usize {
    n.min(((2.0 * m as f64).sqrt()).round() as usize).max(1)
}

/// Initial rank for the given mode, clamped to `[1, n]`. `f64::round`
/// rounds half away from zero.
pub fn initial_rank(n: usize, m: usize, mode: RankMode) -> usize {
    let m = m.max(1) as f64;
    let raw = match mode {
        RankMode::LogSmall => (2.0 * m.ln()).round() as usize,
        RankMode::LogLarge => m.ln().round() as usize,
        RankMode::Sqrt2m => (2.0 * m).sqrt().round() as usize,
        RankMode::Fixed(r) => r,
    };
    raw.clamp(1, n.max(1))
}

pub fn should_escalate(inner_iters: usize, policy: &RankPolicy) -> bool {
    inner_iters >= policy.difficulty_threshold
}

/// Rank after one escalation step: `min(ceil(factor * r), cap)`, never
/// below `r`.
pub fn escalated_rank(r: usize, policy: &RankPolicy) -> usize {
    let grown = (policy.escalation_factor * r as f64).ceil() as usize;
    grown.min(policy.rank_cap).max(r)
}

/// Pads `r` with new small Gaussian columns up to the escalated rank. The
/// existing columns are kept, so `R R^T` moves only by the padding's outer
/// product.
pub fn escalate<R: Rng + ?Sized>(factor: &Factor, policy: &RankPolicy, rng: &mut R) -> Factor {
    let r = factor.cols();
    let target = escalated_rank(r, policy);
    if target == r {
        log::warn!("rank {r} already at cap {}; escalation skipped", policy.rank_cap);
        return factor.clone();
    }
    let n = factor.rows();
    let scale = 1e-3 * factor.norm() / ((n * r) as f64).sqrt();
    let pad = Factor::random_normal(n, target - r, scale, rng);
    factor.with_extra_columns(&pad).expect("row counts agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_modes() {
        assert_eq!("log".parse::<RankMode>().unwrap(), RankMode::LogSmall);
        assert_eq!("log-large".parse::<RankMode>().unwrap(), RankMode::LogLarge);
        assert_eq!("sqrt2m".parse::<RankMode>().unwrap(), RankMode::Sqrt2m);
        assert_eq!("7".parse::<RankMode>().unwrap(), RankMode::Fixed(7));
        assert!("0".parse::<RankMode>().is_err());
        assert!("big".parse::<RankMode>().is_err());
    }

    #[test]
    fn initial_rank_examples() {
        assert_eq!(initial_rank(7000, 7000, RankMode::LogSmall), 18);
        assert_eq!(initial_rank(3000, 930_328, RankMode::LogSmall), 27);
        assert_eq!(initial_rank(7000, 7000, RankMode::Sqrt2m), 118);
        assert_eq!(initial_rank(50, 358, RankMode::Sqrt2m), 27);
        assert_eq!(initial_rank(10, 1, RankMode::LogSmall), 1);
        assert_eq!(initial_rank(10, 1, RankMode::LogLarge), 1);
        assert_eq!(initial_rank(4, 100, RankMode::Sqrt2m), 4);
        assert_eq!(initial_rank(4, 100, RankMode::Fixed(9)), 4);
    }

    #[test]
    fn escalation_threshold_boundary() {
        let p = RankPolicy::new(100, 100, RankMode::LogSmall);
        assert!(!should_escalate(0, &p));
        assert!(should_escalate(p.difficulty_threshold, &p));
        assert!(!should_escalate(p.difficulty_threshold - 1, &p));
    }

    #[test]
    fn escalation_sequences() {
        let qap7 = RankPolicy::new(50, 358, RankMode::LogSmall);
        assert_eq!(qap7.rank_cap, 27);
        assert_eq!(escalated_rank(12, &qap7), 18);

        let qap10 = RankPolicy::new(101, 1021, RankMode::LogSmall);
        assert_eq!(qap10.rank_cap, 45);
        let mut r = 14;
        let mut seen = vec![r];
        while escalated_rank(r, &qap10) != r {
            r = escalated_rank(r, &qap10);
            seen.push(r);
        }
        assert_eq!(seen, vec![14, 21, 32, 45]);
    }

    #[test]
    fn escalate_pads_and_respects_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let policy = RankPolicy::new(30, 100, RankMode::LogSmall);
        let f = Factor::random_normal(30, 4, 1.0, &mut rng);
        let g = escalate(&f, &policy, &mut rng);
        assert_eq!(g.cols(), 6);
        for p in 0..30 {
            assert_eq!(&g.row(p)[..4], f.row(p));
        }
        let full = Factor::random_normal(30, policy.rank_cap, 1.0, &mut rng);
        assert_eq!(escalate(&full, &policy, &mut rng), full);
    }
}
