//! The `SMAT 1` text format.
//!
//! ```text
//! SMAT 1 3
//! 0 1 1.0000000000000000e0
//! 1 2 1.0000000000000000e0
//! 2 0 1.0000000000000000e0
//! END
//! ```
//!
//! Entries are listed in strictly ascending `(row, col)` order with 0-based
//! indices. Files whose rows miss a sum of one by more than
//! [`READ_TOLERANCE`] are rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{check_stochastic, SparseMatrix, StochasticMatrix};

pub const READ_TOLERANCE: f64 = 1e-9;

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

pub fn parse(text: &str) -> Result<StochasticMatrix> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| format_err(1, "empty file"))?;
    let dim = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["SMAT", "1", n] => n
            .parse::<usize>()
            .map_err(|_| format_err(1, format!("bad dimension {n:?}")))?,
        ["SMAT", v, _] => return Err(format_err(1, format!("unsupported SMAT version {v}"))),
        _ => return Err(format_err(1, "expected header `SMAT 1 <n>`")),
    };
    if dim == 0 {
        return Err(format_err(1, "dimension must be positive"));
    }

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    let mut last: Option<(usize, usize)> = None;
    let mut ended = false;
    for (no, line) in lines.by_ref() {
        if line == "END" {
            ended = true;
            break;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [r, c, v] = fields[..] else {
            return Err(format_err(no, "expected `<row> <col> <prob>` or END"));
        };
        let r: usize = r.parse().map_err(|_| format_err(no, format!("bad row index {r:?}")))?;
        let c: usize = c.parse().map_err(|_| format_err(no, format!("bad column index {c:?}")))?;
        let v: f64 = v.parse().map_err(|_| format_err(no, format!("bad probability {v:?}")))?;
        if r >= dim || c >= dim {
            return Err(format_err(no, format!("index ({r}, {c}) out of range for dimension {dim}")));
        }
        if last.is_some_and(|prev| prev >= (r, c)) {
            return Err(format_err(no, "entries not in strictly ascending (row, col) order"));
        }
        if !v.is_finite() || v < 0.0 || v > 1.0 {
            return Err(format_err(no, format!("probability {v} outside [0, 1]")));
        }
        last = Some((r, c));
        rows[r].push((c, v));
    }
    if !ended {
        return Err(format_err(text.lines().count().max(1), "missing END"));
    }
    if let Some((no, _)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(format_err(no, "content after END"));
    }

    let sparse = SparseMatrix::from_rows(dim, rows)?;
    let report = check_stochastic(&sparse, READ_TOLERANCE);
    if let Some(row) = report.worst_row {
        return Err(format_err(
            0,
            format!("row {row} sum is off by {:e} (limit {READ_TOLERANCE:e})", report.worst_row_sum_error),
        ));
    }
    StochasticMatrix::new(sparse, READ_TOLERANCE)
}

pub fn read(path: &Path) -> Result<StochasticMatrix> {
    parse(&std::fs::read_to_string(path)?)
}

/// Writes every stored entry with 17 significant digits, which re-reads to
/// the same `f64`.
pub fn to_string(p: &StochasticMatrix) -> String {
    let mut out = format!("SMAT 1 {}\n", p.dim());
    for i in 0..p.dim() {
        for (j, v) in p.row_entries(i) {
            writeln!(out, "{i} {j} {v:.16e}").unwrap();
        }
    }
    out.push_str("END\n");
    out
}

pub fn write(p: &StochasticMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(p))?;
    Ok(())
}
