//! Gset plain-text graphs: a header line `n edge_count` followed by one
//! `i j w` line per edge with 1-based vertices.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GsetGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl GsetGraph {
    /// Validates 1-based edges: in range, no self loops, no duplicate
    /// undirected pairs, finite weights.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for (k, &(i, j, w)) in edges.iter().enumerate() {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::InvalidArgument(format!("edge {k}: vertex out of range 1..={n}")));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("edge {k}: self loop at {i}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!("edge {k}: non-finite weight")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidArgument(format!("edge {k}: duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines.next().ok_or(Error::MissingSection("graph header"))?;
        let mut toks = header.split_whitespace();
        let n: usize = num(toks.next(), ln, "vertex count")?;
        let count: usize = num(toks.next(), ln, "edge count")?;
        let mut edges = Vec::with_capacity(count);
        let mut seen = HashSet::with_capacity(count);
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            let i: usize = num(toks.next(), ln, "vertex")?;
            let j: usize = num(toks.next(), ln, "vertex")?;
            let w: f64 = num(toks.next(), ln, "weight")?;
            if i == 0 || j == 0 || i > n || j > n || i == j {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("invalid edge ({i}, {j}) for {n} vertices"),
                });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("duplicate edge ({i}, {j})"),
                });
            }
            edges.push((i, j, w));
        }
        if edges.len() != count {
            return Err(Error::Parse {
                line: ln,
                message: format!("header announces {count} edges, found {}", edges.len()),
            });
        }
        Self::new(n, edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.edges.len());
        for &(i, j, w) in &self.edges {
            let _ = writeln!(out, "{i} {j} {w}");
        }
        out
    }

    /// Erdős–Rényi graph in the style of the rudy generator used for Gset:
    /// every pair is an edge with probability `density`; weights are 1, or
    /// uniformly ±1 when `signed`.
    pub fn random(n: usize, density: f64, signed: bool, seed: u64) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::InvalidArgument(format!("density {density} outside (0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                if rng.random::<f64>() < density {
                    let w = if signed && rng.random::<bool>() { -1.0 } else { 1.0 };
                    edges.push((i, j, w));
                }
            }
        }
        Self::new(n, edges)
    }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected {what}, found `{tok}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let g = GsetGraph::parse("3 2\n1 2 1\n2 3 -1\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(1, 2, 1.0), (2, 3, -1.0)]);
        assert_eq!(GsetGraph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(GsetGraph::parse("3 2\n1 2 1\n2 1 1\n").is_err());
        assert!(GsetGraph::parse("3 1\n1 1 1\n").is_err());
        assert!(GsetGraph::parse("3 1\n1 4 1\n").is_err());
        assert!(GsetGraph::parse("3 2\n1 2 1\n").is_err());
        assert!(GsetGraph::parse("").is_err());
    }

    #[test]
    fn random_graph_is_seeded() {
        let a = GsetGraph::random(40, 0.2, true, 7).unwrap();
        let b = GsetGraph::random(40, 0.2, true, 7).unwrap();
        assert_eq!(a, b);
        assert!(!a.edges().is_empty());
        assert!(GsetGraph::random(4, 0.0, false, 1).is_err());
    }
}
