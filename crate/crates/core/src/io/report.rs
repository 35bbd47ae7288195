//! Report output: CSV rows and a plain-text factor dump.
//!
//! Factor files start with a `LRSDP1 <rows> <cols>` header followed by one
//! whitespace-separated row of the factor per line. Values are written in
//! shortest round-trip form, so reading a dump back is lossless.

use std::fmt::Write as _;
use std::path::Path;

use crate::driver::SolveReport;
use crate::error::{Error, Result};
use crate::factor::Factor;

const FACTOR_MAGIC: &str = "LRSDP1";

pub fn factor_to_text(factor: &Factor) -> String {
    let mut out = format!("{FACTOR_MAGIC} {} {}\n", factor.rows(), factor.cols());
    for p in 0..factor.rows() {
        let row = factor.row(p);
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            write!(out, "{v:e}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn factor_from_text(text: &str) -> Result<Factor> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::MissingSection("factor header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let dims = match fields.as_slice() {
        [magic, rows, cols] if *magic == FACTOR_MAGIC => rows.parse::<usize>().ok().zip(cols.parse::<usize>().ok()),
        _ => None,
    };
    let (rows, cols) = dims.ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("expected `{FACTOR_MAGIC} <rows> <cols>`"),
    })?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (idx, line) in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad value `{tok}`: {e}"),
            })?);
        }
        if data.len() - before != cols {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected {cols} values, found {}", data.len() - before),
            });
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("expected {rows} rows, found {seen}"),
        });
    }
    Factor::from_row_major(rows, cols, data)
}

pub fn write_factor(path: &Path, factor: &Factor) -> Result<()> {
    std::fs::write(path, factor_to_text(factor)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_factor(path: &Path) -> Result<Factor> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    factor_from_text(&text)
}

/// The first ten columns are the fixed report schema; the rest are extras.
pub const CSV_HEADER: &str = "name,n,m,phase1_iters,phase2_iters,cg_total,time_s,p_infeas,d_infeas,pd_gap,\
objective,p_infeas_one,p_infeas_two,phase1_inner_total,cg_avg,initial_rank,final_rank,\
time_phase1,time_phase2,status";

fn csv_field(name: &str) -> String {
    if name.contains([',', '"', '\n']) {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

/// `phase1_iters` counts ALM outer iterations; the inner L-BFGS total is
/// `phase1_inner_total`.
pub fn csv_row(name: &str, report: &SolveReport) -> String {
    format!(
        "{},{},{},{},{},{},{:.6},{:.6e},{:.6e},{:.6e},{:.10e},{:.6e},{:.6e},{},{:.3},{},{},{:.6},{:.6},{}",
        csv_field(name),
        report.factor.rows(),
        report.dual.len(),
        report.phase1_outer,
        report.phase2_iters,
        report.cg_total,
        report.time_total.as_secs_f64(),
        report.p_infeas,
        report.d_infeas,
        report.pd_gap,
        report.objective,
        report.p_infeas_one,
        report.p_infeas_two,
        report.phase1_inner_total,
        report.cg_avg,
        report.initial_rank,
        report.final_rank,
        report.time_phase1.as_secs_f64(),
        report.time_phase2.as_secs_f64(),
        report.status,
    )
}

/// Row for an entry that produced no report; only the time is filled in.
pub fn csv_error_row(name: &str, seconds: f64) -> String {
    format!("{},,,,,,{seconds:.6},,,,,,,,,,,,,error", csv_field(name))
}
