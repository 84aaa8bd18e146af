//! Nested families `P⁽ⁿ⁾` and the row-stabilisation check.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{
    conductance_grid, directed_torus, drift_cycle, drift_line, lazy_srw_grid, lazy_torus, LabeledMatrix,
};
use crate::label::Label;

/// A size-indexed sequence of labelled chains whose label sets are nested.
pub trait GraphFamily: Sync {
    /// Member of size index `n`.
    fn member(&self, n: usize) -> Result<LabeledMatrix>;

    /// Smallest valid size index.
    fn min_size(&self) -> usize;

    fn describe(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// Lazy simple random walk on `[-n, n]^dim`.
    Grid { dim: usize, tau: f64 },
    /// Directed Cayley torus on `[-n, n]^dim`.
    DirectedTorus { dim: usize },
    /// Lazy walk on the undirected torus `[-n, n]^dim`.
    LazyTorus { dim: usize, tau: f64 },
    /// Birth–death chain on `1..=n`.
    DriftLine { delta: f64 },
    /// Biased walk on the `n`-cycle.
    DriftCycle {
        delta: f64,
        #[serde(default)]
        perturb_zero: bool,
    },
    /// Reversible walk from grid conductances.
    Conductance {
        dim: usize,
        values: Vec<f64>,
        #[serde(default)]
        self_conductance: Option<f64>,
    },
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Grid { .. } => "grid",
            FamilyKind::DirectedTorus { .. } => "directed_torus",
            FamilyKind::LazyTorus { .. } => "lazy_torus",
            FamilyKind::DriftLine { .. } => "drift_line",
            FamilyKind::DriftCycle { .. } => "drift_cycle",
            FamilyKind::Conductance { .. } => "conductance",
        }
    }

    /// Whether labels are lattice coordinates or integers.
    pub fn label_scheme(&self) -> LabelScheme {
        match self {
            FamilyKind::DriftLine { .. } | FamilyKind::DriftCycle { .. } => LabelScheme::Integer,
            _ => LabelScheme::Lattice,
        }
    }
}

impl GraphFamily for FamilyKind {
    fn member(&self, n: usize) -> Result<LabeledMatrix> {
        match self {
            FamilyKind::Grid { dim, tau } => lazy_srw_grid(*dim, n, *tau),
            FamilyKind::DirectedTorus { dim } => directed_torus(*dim, n),
            FamilyKind::LazyTorus { dim, tau } => lazy_torus(*dim, n, *tau),
            FamilyKind::DriftLine { delta } => drift_line(n, *delta),
            FamilyKind::DriftCycle {
                delta,
                perturb_zero,
            } => drift_cycle(n, *delta, *perturb_zero),
            FamilyKind::Conductance {
                dim,
                values,
                self_conductance,
            } => conductance_grid(*dim, n, values, *self_conductance),
        }
    }

    fn min_size(&self) -> usize {
        match self {
            FamilyKind::DriftLine { .. } => 2,
            FamilyKind::DriftCycle { .. } => 3,
            _ => 1,
        }
    }

    fn describe(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| self.name().to_string())
    }
}

/// Family built from a user closure.
pub struct CustomFamily<F> {
    pub name: String,
    pub min_size: usize,
    pub build: F,
}

impl<F> GraphFamily for CustomFamily<F>
where
    F: Fn(usize) -> Result<LabeledMatrix> + Sync,
{
    fn member(&self, n: usize) -> Result<LabeledMatrix> {
        (self.build)(n)
    }

    fn min_size(&self) -> usize {
        self.min_size
    }

    fn describe(&self) -> String {
        format!("custom:{}", self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    Lattice,
    Integer,
}

/// The `FAM v1` family file: a JSON object with `format`, `version`, the
/// family `kind` and its parameters, and the `labels` scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub family: FamilyKind,
    pub labels: LabelScheme,
}

impl FamilyFile {
    pub fn new(family: FamilyKind) -> Self {
        Self {
            format: "FAM".into(),
            version: 1,
            labels: family.label_scheme(),
            family,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let f: FamilyFile = serde_json::from_str(text)?;
        if f.format != "FAM" || f.version != 1 {
            return Err(Error::Format {
                line: 1,
                message: format!("expected FAM version 1, found {} version {}", f.format, f.version),
            });
        }
        if f.labels != f.family.label_scheme() {
            return Err(Error::Format {
                line: 1,
                message: format!("{} families use {:?} labels", f.family.name(), f.family.label_scheme()),
            });
        }
        Ok(f)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("family serialises")
    }
}

/// Outcome of [`check_stabilization`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationReport {
    pub node: Label,
    /// Smallest tested size from which the row never changes again, or
    /// `None` when the last two tested rows still differ (or only one size
    /// was tested).
    pub stabilization_index: Option<usize>,
    pub tested_range: (usize, usize),
}

/// Finds the size index from which `node`'s labelled row stays bit-identical
/// over the tested range.
pub fn check_stabilization(
    family: &dyn GraphFamily,
    node: &Label,
    n_range: (usize, usize),
) -> Result<StabilizationReport> {
    let (lo, hi) = n_range;
    if lo > hi || lo < family.min_size() {
        return Err(Error::param(format!("invalid size range {lo}..={hi}")));
    }
    let first = family.member(lo)?;
    if !first.contains(node) {
        return Err(Error::UnknownLabel(node.to_string()));
    }
    let mut rows = vec![first.labeled_row(node)?];
    for n in lo + 1..=hi {
        rows.push(family.member(n)?.labeled_row(node)?);
    }
    let last = rows.last().unwrap();
    let mut start = rows.len() - 1;
    while start > 0 && rows[start - 1] == *last {
        start -= 1;
    }
    let stabilization_index = (start + 1 < rows.len()).then_some(lo + start);
    Ok(StabilizationReport {
        node: node.clone(),
        stabilization_index,
        tested_range: n_range,
    })
}
