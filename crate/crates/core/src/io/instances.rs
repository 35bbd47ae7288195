//! Instance generators: MaxCut relaxations from graphs and nuclear-norm
//! matrix completion embeddings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::io::gset::GsetGraph;
use crate::problem::{ClassTag, ObjectiveSense, SdpProblem, SparseSymMatrix};

/// Default generator seed.
pub const DEFAULT_SEED: u64 = 42;

/// Weighted graph Laplacian: `L_ij = -w_ij`, `L_ii = sum_k w_ik`.
pub fn laplacian(graph: &GsetGraph) -> Result<SparseSymMatrix> {
    let n = graph.n();
    let mut degree = vec![0.0; n];
    let mut triplets = Vec::with_capacity(graph.edges().len() + n);
    for &(i, j, w) in graph.edges() {
        degree[i - 1] += w;
        degree[j - 1] += w;
        triplets.push((i - 1, j - 1, -w));
    }
    triplets.extend(degree.iter().enumerate().filter(|(_, d)| **d != 0.0).map(|(i, &d)| (i, i, d)));
    SparseSymMatrix::new(n, triplets)
}

/// MaxCut relaxation `max <L/4, X>  s.t. X_ii = 1`.
///
/// Stored as the minimisation of `<-L/4, X>` and tagged
/// [`ObjectiveSense::Maximize`], so reported objectives are `<L/4, X>`.
pub fn gen_maxcut(graph: &GsetGraph) -> Result<SdpProblem> {
    let n = graph.n();
    let lap = laplacian(graph)?;
    let objective = SparseSymMatrix::new(n, lap.entries().iter().map(|&(i, j, v)| (i, j, -0.25 * v)))?;
    let constraints = (0..n)
        .map(|i| SparseSymMatrix::new(n, [(i, i, 1.0)]))
        .collect::<Result<Vec<_>>>()?;
    Ok(SdpProblem::new(objective, constraints, vec![1.0; n])?
        .with_class_tag(ClassTag::MaxCut)
        .with_sense(ObjectiveSense::Maximize))
}

/// Partially observed `p x q` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct McInstance {
    pub p: usize,
    pub q: usize,
    /// 0-based `(row, col, value)`.
    pub observed: Vec<(usize, usize, f64)>,
    /// Rank of the hidden matrix, when known.
    pub rank: Option<usize>,
    /// Hidden factors `(L, R)` with `M = L R^T`, when known.
    pub hidden: Option<(Factor, Factor)>,
}

impl McInstance {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::InvalidArgument("matrix completion needs p, q >= 1".into()));
        }
        if self.observed.is_empty() {
            return Err(Error::InvalidArgument("no observed entries".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(self.observed.len());
        for &(i, j, v) in &self.observed {
            if i >= self.p || j >= self.q {
                return Err(Error::InvalidArgument(format!("observation ({i}, {j}) out of range")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("observation ({i}, {j}) is not finite")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidArgument(format!("duplicate observation ({i}, {j})")));
            }
        }
        Ok(())
    }

    /// Dense row-major hidden matrix, when the factors are known.
    pub fn hidden_matrix(&self) -> Option<Vec<f64>> {
        let (l, r) = self.hidden.as_ref()?;
        Some(l.outer_dense(r))
    }
}

/// Nuclear-norm embedding of matrix completion.
///
/// The variable is `X = [[W1, Y], [Y^T, W2]]` of order `p + q` with the
/// `p x p` block first; observation `(i, j)` becomes the unit entry at
/// `(i, p + j)` with right-hand side `2 M_ij`, and the objective is `<I, X>`.
pub fn gen_matrix_completion(instance: &McInstance) -> Result<SdpProblem> {
    instance.validate()?;
    let n = instance.p + instance.q;
    let mut constraints = Vec::with_capacity(instance.observed.len());
    let mut rhs = Vec::with_capacity(instance.observed.len());
    for &(i, j, v) in &instance.observed {
        constraints.push(SparseSymMatrix::new(n, [(i, instance.p + j, 1.0)])?);
        rhs.push(2.0 * v);
    }
    SdpProblem::new(SparseSymMatrix::identity(n), constraints, rhs)?
        .with_class_tag(ClassTag::MatrixCompletion)
        .with_block_sizes(vec![n as i64])
}

/// Random low-rank completion instance: `M = L R^T` with standard Gaussian
/// `L` (`p x rank`) and `R` (`q x rank`); `round(fraction * p * q)` entries
/// (at least one) are sampled uniformly without replacement.
pub fn gen_mc_random(p: usize, q: usize, rank: usize, sample_fraction: f64, seed: u64) -> Result<McInstance> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sample fraction {sample_fraction} outside (0, 1]"
        )));
    }
    if p == 0 || q == 0 || rank == 0 || rank > p.min(q) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= rank <= min(p, q), got p={p} q={q} rank={rank}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left = Factor::random_normal(p, rank, 1.0, &mut rng);
    let right = Factor::random_normal(q, rank, 1.0, &mut rng);
    let total = p * q;
    let count = ((sample_fraction * total as f64).round() as usize).clamp(1, total);
    let mut picks = rand::seq::index::sample(&mut rng, total, count).into_vec();
    picks.sort_unstable();
    let observed = picks
        .into_iter()
        .map(|k| {
            let (i, j) = (k / q, k % q);
            let v = crate::factor::dot(left.row(i), right.row(j));
            (i, j, v)
        })
        .collect();
    Ok(McInstance {
        p,
        q,
        observed,
        rank: Some(rank),
        hidden: Some((left, right)),
    })
}
