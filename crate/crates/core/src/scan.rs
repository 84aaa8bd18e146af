//! Democracy diagnostics across family sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::GraphFamily;
use crate::label::Label;
use crate::matrix::ProbabilityVector;
use crate::perturb::PerturbationSpec;
use crate::stationary::{degree_bound, solve, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedWeight {
    pub label: Label,
    pub weight: f64,
}

/// Diagnostics of one family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub n: usize,
    pub state_count: usize,
    /// `‖π⁽ⁿ⁾‖∞`.
    pub max_weight: f64,
    /// Smallest label attaining the maximum.
    pub argmax_label: Label,
    pub tracked_weights: Vec<TrackedWeight>,
    /// `d⁽ⁿ⁾/|E⁽ⁿ⁾|` when the chain is an undirected lazy simple walk.
    pub degree_bound: Option<f64>,
    pub solver: Method,
    pub residual: f64,
}

impl ScanRecord {
    pub fn tracked(&self, label: &Label) -> Option<f64> {
        self.tracked_weights.iter().find(|t| &t.label == label).map(|t| t.weight)
    }
}

/// Largest weight and the smallest label carrying it.
pub fn max_with_label(pi: &ProbabilityVector, labels: &[Label]) -> (f64, Label) {
    let max = pi.max();
    let label = pi
        .as_slice()
        .iter()
        .zip(labels)
        .filter(|(w, _)| **w == max)
        .map(|(_, l)| l)
        .min()
        .expect("nonempty vector")
        .clone();
    (max, label)
}

fn scan_one(
    family: &dyn GraphFamily,
    perturbation: Option<&PerturbationSpec>,
    n: usize,
    tracked: &[Label],
    method: Method,
) -> Result<ScanRecord> {
    let member = family.member(n)?;
    let matrix = match perturbation {
        Some(spec) => spec.apply(&member)?.matrix,
        None => member.matrix.clone(),
    };
    let sol = solve(&matrix, method)?;
    let (max_weight, argmax_label) = max_with_label(&sol.pi, &member.labels);
    let tracked_weights = tracked
        .iter()
        .map(|l| {
            Ok(TrackedWeight {
                label: l.clone(),
                weight: sol.pi[member.index_of(l)?],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanRecord {
        n,
        state_count: matrix.dim(),
        max_weight,
        argmax_label,
        tracked_weights,
        degree_bound: degree_bound(&matrix).ok(),
        solver: method,
        residual: sol.residual,
    })
}

/// Solves every requested size (in parallel) and returns the records in
/// ascending `n`.
///
/// On failure the error carries the records of the sizes below the first
/// failing one.
pub fn democracy_scan(
    family: &dyn GraphFamily,
    perturbation: Option<&PerturbationSpec>,
    sizes: &[usize],
    tracked: &[Label],
    method: Method,
) -> Result<Vec<ScanRecord>> {
    let Some(&smallest) = sizes.first() else {
        return Ok(Vec::new());
    };
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("scan sizes must be strictly ascending"));
    }
    if smallest < family.min_size() {
        return Err(Error::param(format!(
            "size {smallest} below the family minimum {}",
            family.min_size()
        )));
    }
    let base = family.member(smallest)?;
    for l in tracked {
        base.index_of(l)?;
    }
    if let Some(spec) = perturbation {
        spec.validate()?;
        for l in spec.community_labels() {
            base.index_of(&l)?;
        }
    }

    let results: Vec<Result<ScanRecord>> = sizes
        .par_iter()
        .map(|&n| scan_one(family, perturbation, n, tracked, method))
        .collect();
    let mut records = Vec::with_capacity(sizes.len());
    for (r, &n) in results.into_iter().zip(sizes) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                return Err(Error::ScanFailed {
                    n,
                    partial: records,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(records)
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// The CSV view of a scan: one row per size, tracked columns last.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub tracked: Vec<Label>,
    pub rows: Vec<ScanRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub state_count: usize,
    pub max_weight: f64,
    pub argmax_label: Label,
    pub degree_bound: Option<f64>,
    pub residual: f64,
    pub tracked: Vec<f64>,
}

const FIXED_COLUMNS: [&str; 6] = ["n", "state_count", "max_weight", "argmax_label", "degree_bound", "residual"];

impl ScanTable {
    pub fn from_records(tracked: &[Label], records: &[ScanRecord]) -> Result<Self> {
        let rows = records
            .iter()
            .map(|r| {
                let tracked = tracked
                    .iter()
                    .map(|l| r.tracked(l).ok_or_else(|| Error::UnknownLabel(l.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ScanRow {
                    n: r.n,
                    state_count: r.state_count,
                    max_weight: r.max_weight,
                    argmax_label: r.argmax_label.clone(),
                    degree_bound: r.degree_bound,
                    residual: r.residual,
                    tracked,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tracked: tracked.to_vec(),
            rows,
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend(self.tracked.iter().map(Label::to_string));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.n.to_string(),
                r.state_count.to_string(),
                fmt_num(r.max_weight),
                r.argmax_label.to_string(),
                r.degree_bound.map(fmt_num).unwrap_or_default(),
                fmt_num(r.residual),
            ];
            rec.extend(r.tracked.iter().copied().map(fmt_num));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
            return Err(Error::Format {
                line: 1,
                message: "unexpected scan CSV header".into(),
            });
        }
        let tracked = header
            .iter()
            .skip(FIXED_COLUMNS.len())
            .map(str::parse)
            .collect::<Result<Vec<Label>>>()?;
        let mut rows = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let bad = |what: &str| Error::Format {
                line,
                message: format!("bad {what}"),
            };
            let num = |i: usize, what: &str| rec[i].parse::<f64>().map_err(|_| bad(what));
            rows.push(ScanRow {
                n: rec[0].parse().map_err(|_| bad("n"))?,
                state_count: rec[1].parse().map_err(|_| bad("state_count"))?,
                max_weight: num(2, "max_weight")?,
                argmax_label: rec[3].parse()?,
                degree_bound: if rec[4].is_empty() { None } else { Some(num(4, "degree_bound")?) },
                residual: num(5, "residual")?,
                tracked: (FIXED_COLUMNS.len()..rec.len())
                    .map(|i| num(i, "tracked weight"))
                    .collect::<Result<Vec<_>>>()?,
            });
        }
        Ok(Self { tracked, rows })
    }
}

/// JSON summary of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub family: serde_json::Value,
    pub perturbation: Option<PerturbationSpec>,
    pub solver: Method,
    pub records: Vec<ScanRecord>,
}

impl ScanSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialises");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Index of the first size from which `max_weight` strictly decreases
/// through the end of the scan.
pub fn monotone_from(records: &[ScanRecord]) -> Option<usize> {
    if records.is_empty() {
        return None;
    }
    let mut k = records.len() - 1;
    while k > 0 && records[k - 1].max_weight > records[k].max_weight {
        k -= 1;
    }
    Some(records[k].n)
}
