//! SDPA sparse format (`.dat-s`).
//!
//! Layout, in order:
//!
//! ```text
//! "comment lines start with a double quote or an asterisk
//! m                    number of constraint matrices
//! nblocks              number of diagonal blocks
//! s_1 s_2 ... s_k      block sizes, negative = diagonal (LP) block
//! c_1 ... c_m          cost vector
//! matno blkno i j v    one entry per line, 1-based, upper or lower triangle
//! ```
//!
//! The characters `{ } ( ) ,` are treated as whitespace in the header lines,
//! and any text after the leading number of the `m` / `nblocks` lines is
//! ignored.
//!
//! SDPA poses `max <F_0, Y>  s.t. <F_i, Y> = c_i, Y ⪰ 0`. The solver
//! minimises, so the stored problem is `C = -F_0`, `A_i = F_i`, `b = c`, and
//! it is tagged [`ObjectiveSense::Maximize`] so that reports show
//! `<F_0, Y>`. Blocks are embedded in one block-diagonal matrix of order
//! `sum |s_k|`; diagonal blocks only admit `i == j` entries. Duplicate
//! entries within one matrix are rejected.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::problem::{ObjectiveSense, SdpProblem, SparseSymMatrix};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank, non-comment line with its 1-based number.
    fn next_data(&mut self) -> Option<(usize, &'a str)> {
        for (idx, line) in self.inner.by_ref() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('"') || t.starts_with('*') {
                continue;
            }
            return Some((idx + 1, t));
        }
        None
    }
}

fn header_tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, '{' | '}' | '(' | ')' | ','))
        .filter(|t| !t.is_empty())
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse::<T>().map_err(|_| Error::Parse {
        line,
        message: format!("expected {what}, found `{tok}`"),
    })
}

fn leading_int(lines: &mut Lines<'_>, section: &'static str) -> Result<(usize, i64)> {
    let (ln, line) = lines.next_data().ok_or(Error::MissingSection(section))?;
    let tok = header_tokens(line).next().ok_or(Error::MissingSection(section))?;
    Ok((ln, parse_num(tok, ln, section)?))
}

/// Parses SDPA sparse text into a problem.
pub fn parse_sdpa(text: &str) -> Result<SdpProblem> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };

    let (ln, m) = leading_int(&mut lines, "constraint count")?;
    if m < 1 {
        return Err(Error::Parse {
            line: ln,
            message: format!("constraint count must be positive, got {m}"),
        });
    }
    let m = m as usize;
    let (ln, nblocks) = leading_int(&mut lines, "block count")?;
    if nblocks < 1 {
        return Err(Error::Parse {
            line: ln,
            message: format!("block count must be positive, got {nblocks}"),
        });
    }
    let nblocks = nblocks as usize;

    let mut blocks: Vec<i64> = Vec::with_capacity(nblocks);
    while blocks.len() < nblocks {
        let (ln, line) = lines.next_data().ok_or(Error::MissingSection("block sizes"))?;
        for tok in header_tokens(line) {
            if blocks.len() == nblocks {
                break;
            }
            let s: i64 = parse_num(tok, ln, "block size")?;
            if s == 0 {
                return Err(Error::Parse {
                    line: ln,
                    message: "zero block size".into(),
                });
            }
            blocks.push(s);
        }
    }

    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    while rhs.len() < m {
        let (ln, line) = lines.next_data().ok_or(Error::MissingSection("cost vector"))?;
        for tok in header_tokens(line) {
            if rhs.len() == m {
                break;
            }
            rhs.push(parse_num(tok, ln, "cost coefficient")?);
        }
    }

    let mut offsets = Vec::with_capacity(nblocks);
    let mut n = 0usize;
    for &b in &blocks {
        offsets.push(n);
        n += b.unsigned_abs() as usize;
    }

    let mut triplets: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); m + 1];
    let mut origin: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    while let Some((ln, line)) = lines.next_data() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 5 {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected `matno blkno i j value`, found `{line}`"),
            });
        }
        let matno: usize = parse_num(toks[0], ln, "matrix number")?;
        let blkno: usize = parse_num(toks[1], ln, "block number")?;
        let i: usize = parse_num(toks[2], ln, "row index")?;
        let j: usize = parse_num(toks[3], ln, "column index")?;
        let v: f64 = parse_num(toks[4], ln, "entry value")?;
        if matno > m {
            return Err(Error::Parse {
                line: ln,
                message: format!("matrix number {matno} exceeds constraint count {m}"),
            });
        }
        if blkno == 0 || blkno > nblocks {
            return Err(Error::Parse {
                line: ln,
                message: format!("block number {blkno} outside 1..={nblocks}"),
            });
        }
        let size = blocks[blkno - 1];
        let usize_size = size.unsigned_abs() as usize;
        if i == 0 || j == 0 || i > usize_size || j > usize_size || (size < 0 && i != j) {
            return Err(Error::IndexOutOfBlock {
                line: ln,
                block: blkno,
                row: i,
                col: j,
                size: usize_size,
            });
        }
        let off = offsets[blkno - 1];
        triplets[matno].push((off + i - 1, off + j - 1, v));
        origin[matno].push(ln);
    }

    let mut mats = Vec::with_capacity(m + 1);
    for (k, t) in triplets.into_iter().enumerate() {
        let lines_of = &origin[k];
        let mat = SparseSymMatrix::new(n, t).map_err(|e| Error::Parse {
            line: lines_of.last().copied().unwrap_or(0),
            message: format!("matrix {k}: {e}"),
        })?;
        mats.push(mat);
    }
    let mut mats = mats.into_iter();
    let f0 = mats.next().expect("objective slot");
    let objective = SparseSymMatrix::new(n, f0.entries().iter().map(|&(i, j, v)| (i, j, -v)))?;
    let constraints: Vec<_> = mats.collect();

    let problem = SdpProblem::new(objective, constraints, rhs)?
        .with_block_sizes(blocks)?
        .with_sense(ObjectiveSense::Maximize);
    let tag = problem.detect_class();
    Ok(problem.with_class_tag(tag))
}

fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Serialises a problem in SDPA sparse format. The objective is written
/// as `F_0 = -C` for minimisation-stored problems so that parsing the
/// output reproduces the stored data.
pub fn write_sdpa(problem: &SdpProblem) -> Result<String> {
    let blocks = problem.block_sizes();
    let mut block_of = Vec::with_capacity(problem.n());
    for (k, &b) in blocks.iter().enumerate() {
        let start = block_of.len();
        for local in 0..b.unsigned_abs() as usize {
            block_of.push((k, start, local));
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "\"lorank export, n = {}", problem.n());
    let _ = writeln!(out, "{}", problem.m());
    let _ = writeln!(out, "{}", blocks.len());
    let sizes: Vec<String> = blocks.iter().map(|b| b.to_string()).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let costs: Vec<String> = problem.rhs().iter().map(|&c| fmt_num(c)).collect();
    let _ = writeln!(out, "{}", costs.join(" "));

    let mut emit = |matno: usize, mat: &SparseSymMatrix, sign: f64| -> Result<()> {
        for &(i, j, v) in mat.entries() {
            let (bi, _, li) = block_of[i];
            let (bj, _, lj) = block_of[j];
            if bi != bj {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) of matrix {matno} crosses blocks"
                )));
            }
            let _ = writeln!(out, "{} {} {} {} {}", matno, bi + 1, li + 1, lj + 1, fmt_num(sign * v));
        }
        Ok(())
    };
    emit(0, problem.objective(), -1.0)?;
    for (k, a) in problem.constraints().iter().enumerate() {
        emit(k + 1, a, 1.0)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\"minimal\n1\n1\n2\n1.0\n0 1 1 1 -1.0\n0 1 2 2 -1.0\n1 1 1 1 1.0\n1 1 2 2 1.0\n";

    #[test]
    fn minimal_file() {
        let p = parse_sdpa(MINIMAL).unwrap();
        assert_eq!((p.n(), p.m()), (2, 1));
        assert!(p.objective().is_identity());
        assert!(p.constraints()[0].is_identity());
        assert_eq!(p.rhs(), &[1.0]);
    }

    #[test]
    fn braces_and_commas_are_whitespace() {
        let text = "* star comment\n2 =mdim\n2 =nblocks\n{2, -3}\n(1.0, 2.5)\n1 1 1 2 1.0\n2 2 3 3 1.0\n";
        let p = parse_sdpa(text).unwrap();
        assert_eq!(p.n(), 5);
        assert_eq!(p.block_sizes(), &[2, -3]);
        assert_eq!(p.rhs(), &[1.0, 2.5]);
        assert_eq!(p.constraints()[1].entries(), &[(4, 4, 1.0)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "1\n1\n2\n1.0\n1 1 1 x 1.0\n";
        assert!(matches!(parse_sdpa(bad), Err(Error::Parse { line: 5, .. })));
        let oob = "1\n1\n2\n1.0\n1 1 1 3 1.0\n";
        assert!(matches!(parse_sdpa(oob), Err(Error::IndexOutOfBlock { line: 5, .. })));
        let diag = "1\n1\n-2\n1.0\n1 1 1 2 1.0\n";
        assert!(matches!(parse_sdpa(diag), Err(Error::IndexOutOfBlock { .. })));
        assert!(matches!(parse_sdpa("1\n1\n"), Err(Error::MissingSection(_))));
        assert!(matches!(parse_sdpa(""), Err(Error::MissingSection(_))));
        let short = "1\n1\n2\n1.0\n1 1 1\n";
        assert!(matches!(parse_sdpa(short), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let p = parse_sdpa("2\n2\n2 -1\n1 3e-20\n0 1 1 2 0.25\n1 1 1 1 1\n2 2 1 1 -7.5\n").unwrap();
        let text = write_sdpa(&p).unwrap();
        assert_eq!(parse_sdpa(&text).unwrap(), p);
    }
}
