//! Generators for the finite members of the graph families.
//!
//! Every generator returns a [`LabeledMatrix`]: the chain together with the
//! stable global labels of its states, so members of different sizes can be
//! compared node by node.

use std::collections::{HashMap, VecDeque};

use crate::conductance::{from_conductance, ConductanceMatrix};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::matrix::{SparseMatrix, StochasticMatrix};

/// Largest state count a lattice generator will build.
pub const MAX_STATES: usize = 50_000_000;

/// A chain whose states carry stable labels.
#[derive(Debug, Clone)]
pub struct LabeledMatrix {
    pub matrix: StochasticMatrix,
    pub labels: Vec<Label>,
    index: HashMap<Label, usize>,
}

impl LabeledMatrix {
    pub fn new(matrix: StochasticMatrix, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != matrix.dim() {
            return Err(Error::DimensionMismatch {
                left: matrix.dim(),
                right: labels.len(),
            });
        }
        let index: HashMap<Label, usize> =
            labels.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        if index.len() != labels.len() {
            return Err(Error::param("duplicate state labels"));
        }
        Ok(Self {
            matrix,
            labels,
            index,
        })
    }

    /// Labels `0..n` for a plain matrix.
    pub fn indexed(matrix: StochasticMatrix) -> Self {
        let labels = (0..matrix.dim() as i64).map(Label::int).collect();
        Self::new(matrix, labels).expect("integer labels are distinct")
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn index_of(&self, label: &Label) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.index.contains_key(label)
    }

    /// The row of `label` as `(target label, probability)` sorted by label.
    pub fn labeled_row(&self, label: &Label) -> Result<Vec<(Label, f64)>> {
        let i = self.index_of(label)?;
        let mut row: Vec<(Label, f64)> = self
            .matrix
            .row_entries(i)
            .map(|(j, p)| (self.labels[j].clone(), p))
            .collect();
        row.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(row)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if (0.0..1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::param(format!("self-confidence tau = {tau} outside [0, 1)")))
    }
}

/// Points of `[-n, n]^d` in lexicographic order.
struct Lattice {
    d: usize,
    n: i64,
    side: usize,
    count: usize,
}

impl Lattice {
    fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::param(format!("lattice needs d >= 1 and n >= 1 (got d = {d}, n = {n})")));
        }
        let side = 2 * n + 1;
        let count = (0..d)
            .try_fold(1usize, |acc, _| acc.checked_mul(side))
            .filter(|&c| c <= MAX_STATES)
            .ok_or_else(|| Error::param(format!("[-{n}, {n}]^{d} has too many states")))?;
        Ok(Self {
            d,
            n: n as i64,
            side,
            count,
        })
    }

    fn point(&self, mut idx: usize) -> Vec<i64> {
        let mut x = vec![0; self.d];
        for k in (0..self.d).rev() {
            x[k] = (idx % self.side) as i64 - self.n;
            idx /= self.side;
        }
        x
    }

    fn index(&self, x: &[i64]) -> usize {
        x.iter()
            .fold(0, |acc, &c| acc * self.side + (c + self.n) as usize)
    }

    fn wrap(&self, c: i64) -> i64 {
        (c + self.n).rem_euclid(self.side as i64) - self.n
    }

    fn labels(&self) -> Vec<Label> {
        (0..self.count).map(|i| Label(self.point(i))).collect()
    }

    /// Neighbours of `x` inside the box, ordered by axis then direction.
    fn box_neighbors(&self, x: &[i64]) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.d);
        let mut y = x.to_vec();
        for k in 0..self.d {
            for step in [-1, 1] {
                let c = x[k] + step;
                if c.abs() <= self.n {
                    y[k] = c;
                    out.push(self.index(&y));
                }
            }
            y[k] = x[k];
        }
        out
    }

    fn torus_neighbors(&self, x: &[i64], steps: &[i64]) -> Vec<usize> {
        let mut out = Vec::with_capacity(steps.len() * self.d);
        let mut y = x.to_vec();
        for k in 0..self.d {
            for &step in steps {
                y[k] = self.wrap(x[k] + step);
                out.push(self.index(&y));
            }
            y[k] = x[k];
        }
        out
    }
}

fn lazy_rows(neighbors: Vec<Vec<usize>>, tau: f64) -> Vec<Vec<(usize, f64)>> {
    neighbors
        .into_iter()
        .enumerate()
        .map(|(i, nb)| {
            let w = (1.0 - tau) / nb.len() as f64;
            let mut row: Vec<(usize, f64)> = nb.into_iter().map(|j| (j, w)).collect();
            if tau > 0.0 {
                row.push((i, tau));
            }
            row
        })
        .collect()
}

/// Lazy simple random walk on the grid `[-n, n]^d` with self-confidence `tau`.
pub fn lazy_srw_grid(d: usize, n: usize, tau: f64) -> Result<LabeledMatrix> {
    check_tau(tau)?;
    let lat = Lattice::new(d, n)?;
    let nbrs = (0..lat.count).map(|i| lat.box_neighbors(&lat.point(i))).collect();
    let m = StochasticMatrix::from_rows(lat.count, lazy_rows(nbrs, tau))?;
    LabeledMatrix::new(m, lat.labels())
}

/// Simple random walk on the directed Cayley torus: from each node one step
/// `+e_k` per axis, modulo `2n + 1`.
pub fn directed_torus(d: usize, n: usize) -> Result<LabeledMatrix> {
    let lat = Lattice::new(d, n)?;
    let w = 1.0 / d as f64;
    let rows = (0..lat.count)
        .map(|i| {
            lat.torus_neighbors(&lat.point(i), &[1])
                .into_iter()
                .map(|j| (j, w))
                .collect()
        })
        .collect();
    let m = StochasticMatrix::from_rows(lat.count, rows)?;
    LabeledMatrix::new(m, lat.labels())
}

/// Lazy simple random walk on the undirected `2d`-neighbour torus `[-n, n]^d`.
pub fn lazy_torus(d: usize, n: usize, tau: f64) -> Result<LabeledMatrix> {
    check_tau(tau)?;
    let lat = Lattice::new(d, n)?;
    let nbrs = (0..lat.count)
        .map(|i| lat.torus_neighbors(&lat.point(i), &[-1, 1]))
        .collect();
    let m = StochasticMatrix::from_rows(lat.count, lazy_rows(nbrs, tau))?;
    LabeledMatrix::new(m, lat.labels())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("drift delta = {delta} outside (0, 1)")))
    }
}

/// Birth–death chain on `1..=n`: up with probability `delta`, down with
/// `1 − delta`, holding at the two ends.
pub fn drift_line(n: usize, delta: f64) -> Result<LabeledMatrix> {
    check_delta(delta)?;
    if n < 2 {
        return Err(Error::param("drift line needs n >= 2"));
    }
    let rows = (0..n)
        .map(|i| {
            let down = if i == 0 { (0, 1.0 - delta) } else { (i - 1, 1.0 - delta) };
            let up = if i + 1 == n { (i, delta) } else { (i + 1, delta) };
            vec![down, up]
        })
        .collect();
    let m = StochasticMatrix::from_rows(n, rows)?;
    LabeledMatrix::new(m, (1..=n as i64).map(Label::int).collect())
}

/// Labels of the `n`-cycle: `-⌈n/2⌉ + 1 ..= ⌊n/2⌋`.
pub fn drift_cycle_labels(n: usize) -> std::ops::RangeInclusive<i64> {
    let n = n as i64;
    (-(n + 1) / 2 + 1)..=(n / 2)
}

/// Biased walk on the `n`-cycle: to the next lower label with probability
/// `delta`, to the next higher with `1 − delta`, wrapping `⌊n/2⌋ ↔ -⌈n/2⌉+1`.
///
/// With `perturb_zero`, state 0 instead sends `delta` to state 1 and
/// `1 − delta` to the state two steps up, so nothing leaves 0 downwards.
pub fn drift_cycle(n: usize, delta: f64, perturb_zero: bool) -> Result<LabeledMatrix> {
    check_delta(delta)?;
    if n < 3 {
        return Err(Error::param("drift cycle needs n >= 3"));
    }
    let labels: Vec<Label> = drift_cycle_labels(n).map(Label::int).collect();
    let zero = (n + 1) / 2 - 1;
    let rows = (0..n)
        .map(|i| {
            let up = (i + 1) % n;
            if perturb_zero && i == zero {
                vec![(up, delta), ((i + 2) % n, 1.0 - delta)]
            } else {
                vec![((i + n - 1) % n, delta), (up, 1.0 - delta)]
            }
        })
        .collect();
    let m = StochasticMatrix::from_rows(n, rows)?;
    LabeledMatrix::new(m, labels)
}

/// Conductance of the edge from `x` along axis `k`, picked from `values`.
fn edge_value(x: &[i64], k: usize, values: &[f64]) -> f64 {
    let s: i64 = x.iter().sum::<i64>() + k as i64;
    values[s.rem_euclid(values.len() as i64) as usize]
}

/// Conductance matrix on the grid `[-n, n]^d`; each edge takes a value from
/// `values` by a fixed rule on its lower endpoint, and every vertex may carry
/// a self-conductance.
pub fn grid_conductance(d: usize, n: usize, values: &[f64], self_conductance: Option<f64>) -> Result<(ConductanceMatrix, Vec<Label>)> {
    let lat = Lattice::new(d, n)?;
    let mut theta = values.to_vec();
    if let Some(s) = self_conductance {
        if !theta.contains(&s) {
            theta.push(s);
        }
    }
    let rows = (0..lat.count)
        .map(|i| {
            let x = lat.point(i);
            let mut row = Vec::with_capacity(2 * d + 1);
            let mut y = x.clone();
            for k in 0..d {
                if x[k] > -lat.n {
                    y[k] = x[k] - 1;
                    row.push((lat.index(&y), edge_value(&y, k, values)));
                }
                if x[k] < lat.n {
                    y[k] = x[k] + 1;
                    row.push((lat.index(&y), edge_value(&x, k, values)));
                }
                y[k] = x[k];
            }
            if let Some(s) = self_conductance {
                row.push((i, s));
            }
            row
        })
        .collect();
    let c = ConductanceMatrix::new(SparseMatrix::from_rows(lat.count, rows)?, theta)?;
    Ok((c, lat.labels()))
}

/// Reversible chain of [`grid_conductance`].
pub fn conductance_grid(d: usize, n: usize, values: &[f64], self_conductance: Option<f64>) -> Result<LabeledMatrix> {
    let (c, labels) = grid_conductance(d, n, values, self_conductance)?;
    LabeledMatrix::new(from_conductance(&c)?, labels)
}

/// Appends `m` states forming a directed path `exit → t₁ → … → t_m → entry`.
///
/// The exit row keeps its self-loop and spreads the remaining mass uniformly
/// over its old out-neighbours plus `t₁`; tail rows are deterministic.
pub fn append_cycle_tail(p: &StochasticMatrix, exit: usize, entry: usize, m: usize) -> Result<StochasticMatrix> {
    let dim = p.dim();
    if m < 1 {
        return Err(Error::param("tail length must be >= 1"));
    }
    if exit >= dim || entry >= dim {
        return Err(Error::param("exit or entry state out of range"));
    }
    let self_loop = p.get(exit, exit);
    let off: Vec<(usize, f64)> = p.row_entries(exit).filter(|&(j, _)| j != exit).collect();
    if let Some(&(_, w0)) = off.first() {
        if off.iter().any(|&(_, w)| (w - w0).abs() > 1e-12) {
            return Err(Error::NotSrwForm(format!("row {exit} has unequal off-diagonal weights")));
        }
    }
    let w = (1.0 - self_loop) / (off.len() + 1) as f64;
    let mut rows = p.to_rows();
    let mut exit_row: Vec<(usize, f64)> = off.iter().map(|&(j, _)| (j, w)).collect();
    if self_loop > 0.0 {
        exit_row.push((exit, self_loop));
    }
    exit_row.push((dim, w));
    rows[exit] = exit_row;
    for k in 0..m {
        let next = if k + 1 == m { entry } else { dim + k + 1 };
        rows.push(vec![(next, 1.0)]);
    }
    StochasticMatrix::new(SparseMatrix::from_rows(dim + m, rows)?, p.tolerance())
}

/// For every state, the product of transition probabilities along a
/// breadth-first shortest path to `target` (ties broken by lowest index).
pub fn path_probabilities(p: &StochasticMatrix, target: usize) -> Result<Vec<f64>> {
    let n = p.dim();
    let mut rev = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in p.row_entries(i) {
            if i != j {
                rev[j].push(i);
            }
        }
    }
    let mut next_hop = vec![usize::MAX; n];
    let mut q = vec![0.0; n];
    q[target] = 1.0;
    next_hop[target] = target;
    let mut queue = VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if next_hop[u] == usize::MAX {
                next_hop[u] = v;
                q[u] = p.get(u, v) * q[v];
                queue.push_back(u);
            }
        }
    }
    if let Some(u) = next_hop.iter().position(|&h| h == usize::MAX) {
        return Err(Error::param(format!("state {u} cannot reach state {target}")));
    }
    Ok(q)
}

/// Tail length `⌈(d + 1)·n / min_i q_i⌉`, with `d` the exit out-degree and
/// `q_i` from [`path_probabilities`].
pub fn democratizing_tail_length(p: &StochasticMatrix, exit: usize) -> Result<usize> {
    let q = path_probabilities(p, exit)?;
    let qmin = q.iter().copied().fold(f64::INFINITY, f64::min);
    let d = p.row_entries(exit).filter(|&(j, _)| j != exit).count();
    let m = ((d + 1) as f64 * p.dim() as f64 / qmin).ceil();
    if !(m.is_finite() && m < MAX_STATES as f64) {
        return Err(Error::param(format!("tail length {m} too large")));
    }
    Ok(m as usize)
}

/// [`append_cycle_tail`] with [`democratizing_tail_length`].
pub fn append_democratizing_tail(p: &StochasticMatrix, exit: usize, entry: usize) -> Result<StochasticMatrix> {
    let m = democratizing_tail_length(p, exit)?;
    append_cycle_tail(p, exit, entry, m)
}
