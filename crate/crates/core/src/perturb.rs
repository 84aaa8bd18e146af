//! Perturbations confined to a finite community `W`.
//!
//! Every operator rewrites only the rows of states in `W`; all other rows are
//! copied bit for bit. Irreducibility of the result is reported, never
//! enforced.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::LabeledMatrix;
use crate::label::Label;
use crate::matrix::{SparseMatrix, StochasticMatrix, DEFAULT_TOLERANCE};
use crate::srw::{srw_form, undirected_srw_form};
use crate::structure::is_irreducible;

/// A perturbed chain and what was touched.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub matrix: StochasticMatrix,
    /// Sorted indices of the rewritten rows.
    pub community: Vec<usize>,
    pub irreducible: bool,
}

fn finish(rows: Vec<Vec<(usize, f64)>>, tolerance: f64, community: BTreeSet<usize>) -> Result<Perturbed> {
    let dim = rows.len();
    let matrix = StochasticMatrix::new(SparseMatrix::from_rows(dim, rows)?, tolerance)?;
    let irreducible = is_irreducible(&matrix);
    Ok(Perturbed {
        matrix,
        community: community.into_iter().collect(),
        irreducible,
    })
}

/// Replaces the rows of the listed states.
pub fn replace_rows(p: &StochasticMatrix, replacements: &[(usize, Vec<(usize, f64)>)]) -> Result<Perturbed> {
    let dim = p.dim();
    let mut rows = p.to_rows();
    let mut community = BTreeSet::new();
    for (i, row) in replacements {
        let i = *i;
        if i >= dim {
            return Err(Error::IndexOutOfRange { row: i, col: i, dim });
        }
        let check = SparseMatrix::from_rows(dim, {
            let mut v = vec![Vec::new(); dim];
            v[0] = row.clone();
            v
        })
        .map_err(|e| match e {
            Error::IndexOutOfRange { col, .. } => Error::IndexOutOfRange { row: i, col, dim },
            other => other,
        })?;
        let sum = check.row_sum(0);
        if let Some((j, v)) = check.row_entries(0).find(|&(_, v)| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidEntry { row: i, col: j, value: v });
        }
        if (sum - 1.0).abs() > DEFAULT_TOLERANCE {
            return Err(Error::RowSum {
                row: i,
                sum,
                tolerance: DEFAULT_TOLERANCE,
            });
        }
        rows[i] = check.row_entries(0).collect();
        community.insert(i);
    }
    finish(rows, p.tolerance().min(DEFAULT_TOLERANCE), community)
}

/// Homophily reweighting of the community rows of a lazy simple random walk.
///
/// For `i ∈ W` with degree `d_i` and `d_{i,W}` neighbours inside `W`, each
/// in-community neighbour gets `λ(1−τ)/(d_i + (λ−1)d_{i,W})`, each outside
/// neighbour `(1−τ)/(d_i + (λ−1)d_{i,W})`, and the self-loop stays `τ`.
/// Community states with no neighbour inside `W` keep their row.
pub fn homophily(p: &StochasticMatrix, community: &[usize], lambda: f64) -> Result<Perturbed> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::param(format!("homophily lambda = {lambda} must be >= 1")));
    }
    if community.is_empty() {
        return Err(Error::param("homophily needs a nonempty community"));
    }
    let form = undirected_srw_form(p)?;
    let dim = p.dim();
    let mut in_w = vec![false; dim];
    for &i in community {
        if i >= dim {
            return Err(Error::IndexOutOfRange { row: i, col: i, dim });
        }
        in_w[i] = true;
    }
    let mut rows = p.to_rows();
    for &i in community {
        let d = form.degree(i) as f64;
        let d_w = form.neighbors[i].iter().filter(|&&j| in_w[j]).count() as f64;
        let denom = d + (lambda - 1.0) * d_w;
        // rescale the existing weight (1−τ)/d so that λ = 1 is exact
        let inside = lambda * d / denom;
        let outside = d / denom;
        for e in rows[i].iter_mut() {
            if e.0 != i {
                e.1 *= if in_w[e.0] { inside } else { outside };
            }
        }
    }
    finish(rows, p.tolerance(), community.iter().copied().collect())
}

/// Removes directed edges and rebuilds each affected row as a lazy walk
/// over the remaining out-neighbours.
pub fn cut_directed_edges(p: &StochasticMatrix, edges: &[(usize, usize)]) -> Result<Perturbed> {
    let form = srw_form(p)?;
    let dim = p.dim();
    let mut removed: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); dim];
    for &(from, to) in edges {
        if from >= dim || to >= dim {
            return Err(Error::IndexOutOfRange { row: from, col: to, dim });
        }
        if from == to || p.get(from, to) == 0.0 {
            return Err(Error::param(format!("{from} -> {to} is not an edge")));
        }
        removed[from].insert(to);
    }
    let mut rows = p.to_rows();
    let mut community = BTreeSet::new();
    for (i, cut) in removed.iter().enumerate() {
        if cut.is_empty() {
            continue;
        }
        let keep: Vec<usize> = form.neighbors[i].iter().copied().filter(|j| !cut.contains(j)).collect();
        if keep.is_empty() {
            return Err(Error::param(format!("cutting leaves state {i} without out-neighbours")));
        }
        let w = (1.0 - form.tau) / keep.len() as f64;
        let mut row: Vec<(usize, f64)> = keep.into_iter().map(|j| (j, w)).collect();
        if form.tau > 0.0 {
            row.push((i, form.tau));
        }
        rows[i] = row;
        community.insert(i);
    }
    finish(rows, p.tolerance(), community)
}

/// One replacement row, in labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementRow {
    pub node: Label,
    pub entries: Vec<(Label, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    ReplaceRows {
        rows: Vec<ReplacementRow>,
    },
    Homophily {
        lambda: f64,
        /// When present, must match the self-loop of the perturbed walk.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
    },
    CutEdges {
        edges: Vec<(Label, Label)>,
    },
}

/// A perturbation described in node labels, so the same description applies
/// to every member of a family. Stored on disk as a `PERT v1` JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(default = "pert_format")]
    pub format: String,
    #[serde(default = "pert_version")]
    pub version: u32,
    /// `W`. For edge cuts it may be left empty and is then inferred.
    #[serde(default)]
    pub community: Vec<Label>,
    #[serde(flatten)]
    pub kind: PerturbationKind,
}

fn pert_format() -> String {
    "PERT".into()
}

fn pert_version() -> u32 {
    1
}

impl PerturbationSpec {
    pub fn new(community: Vec<Label>, kind: PerturbationKind) -> Result<Self> {
        let spec = Self {
            format: pert_format(),
            version: pert_version(),
            community,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn homophily(community: Vec<Label>, lambda: f64) -> Result<Self> {
        Self::new(community, PerturbationKind::Homophily { lambda, tau: None })
    }

    /// Structural checks that do not need a matrix.
    pub fn validate(&self) -> Result<()> {
        if self.format != "PERT" || self.version != 1 {
            return Err(Error::Format {
                line: 1,
                message: format!("expected PERT version 1, found {} version {}", self.format, self.version),
            });
        }
        let w: BTreeSet<&Label> = self.community.iter().collect();
        match &self.kind {
            PerturbationKind::Homophily { lambda, tau } => {
                if !(*lambda >= 1.0) {
                    return Err(Error::param(format!("homophily lambda = {lambda} must be >= 1")));
                }
                if w.is_empty() {
                    return Err(Error::param("homophily needs a nonempty community"));
                }
                if let Some(t) = tau {
                    if !(0.0..1.0).contains(t) {
                        return Err(Error::param(format!("tau = {t} outside [0, 1)")));
                    }
                }
            }
            PerturbationKind::ReplaceRows { rows } => {
                for r in rows {
                    if !w.contains(&r.node) {
                        return Err(Error::param(format!("replacement row {} outside the community", r.node)));
                    }
                    let sum: f64 = r.entries.iter().map(|e| e.1).sum();
                    if r.entries.iter().any(|e| !(e.1 > 0.0 && e.1 <= 1.0)) || (sum - 1.0).abs() > DEFAULT_TOLERANCE {
                        return Err(Error::param(format!("replacement row {} is not stochastic", r.node)));
                    }
                }
            }
            PerturbationKind::CutEdges { edges } => {
                if !w.is_empty() {
                    if let Some((from, _)) = edges.iter().find(|(f, _)| !w.contains(f)) {
                        return Err(Error::param(format!("cut edge source {from} outside the community")));
                    }
                }
            }
        }
        Ok(())
    }

    /// The community, inferred from the cut sources when left empty.
    pub fn community_labels(&self) -> Vec<Label> {
        match &self.kind {
            PerturbationKind::CutEdges { edges } if self.community.is_empty() => {
                let set: BTreeSet<Label> = edges.iter().map(|(f, _)| f.clone()).collect();
                set.into_iter().collect()
            }
            _ => self.community.clone(),
        }
    }

    pub fn with_lambda(mut self, new_lambda: f64) -> Result<Self> {
        match &mut self.kind {
            PerturbationKind::Homophily { lambda, .. } => *lambda = new_lambda,
            _ => return Err(Error::param("lambda only applies to homophily perturbations")),
        }
        self.validate()?;
        Ok(self)
    }

    /// Applies the perturbation to a labelled chain.
    pub fn apply(&self, target: &LabeledMatrix) -> Result<Perturbed> {
        self.validate()?;
        let index = |l: &Label| target.index_of(l);
        let community = self
            .community_labels()
            .iter()
            .map(index)
            .collect::<Result<Vec<_>>>()?;
        match &self.kind {
            PerturbationKind::ReplaceRows { rows } => {
                let reps = rows
                    .iter()
                    .map(|r| {
                        let entries = r
                            .entries
                            .iter()
                            .map(|(l, p)| Ok((index(l)?, *p)))
                            .collect::<Result<Vec<_>>>()?;
                        Ok((index(&r.node)?, entries))
                    })
                    .collect::<Result<Vec<_>>>()?;
                replace_rows(&target.matrix, &reps)
            }
            PerturbationKind::Homophily { lambda, tau } => {
                if let Some(t) = tau {
                    let actual = srw_form(&target.matrix)?.tau;
                    if (actual - t).abs() > 1e-12 {
                        return Err(Error::NotSrwForm(format!("self-loop {actual} differs from declared tau {t}")));
                    }
                }
                homophily(&target.matrix, &community, *lambda)
            }
            PerturbationKind::CutEdges { edges } => {
                let idx = edges
                    .iter()
                    .map(|(a, b)| Ok((index(a)?, index(b)?)))
                    .collect::<Result<Vec<_>>>()?;
                cut_directed_edges(&target.matrix, &idx)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("perturbation serialises")
    }
}

/// The square `[-r, r]^d` as lattice labels.
pub fn box_community(d: usize, r: i64) -> Vec<Label> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (-r..=r).map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(Label).collect()
}
