//! Expected hitting and return times, Kac's identity, and the gambler's
//! ruin closed form.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{SparseMatrix, StochasticMatrix};
use crate::reduction::{absorption_reward, rcm_order};
use crate::stationary::stationary_direct;
use crate::structure::strongly_connected_components;

/// Hitting-time solver that reuses one bandwidth-reducing order across
/// target sets.
pub struct HittingSolver<'a> {
    matrix: &'a StochasticMatrix,
    order: Vec<usize>,
    /// Reverse adjacency, or `None` when the chain is irreducible and every
    /// state hits every nonempty set almost surely.
    rev: Option<Vec<Vec<usize>>>,
}

impl<'a> HittingSolver<'a> {
    pub fn new(matrix: &'a StochasticMatrix) -> Self {
        let adj = matrix.adjacency();
        let order = rcm_order(&adj);
        let rev = (strongly_connected_components(&adj).len() != 1).then(|| {
            let mut rev = vec![Vec::new(); adj.len()];
            for (u, out) in adj.iter().enumerate() {
                for &v in out {
                    rev[v].push(u);
                }
            }
            rev
        });
        Self { matrix, order, rev }
    }

    /// States from which `targets` is hit with probability one: those that
    /// cannot reach, while avoiding `targets`, a state that never reaches them.
    fn sure_hitters(&self, in_target: &[bool], targets: &[usize]) -> Vec<bool> {
        let n = self.matrix.dim();
        let Some(rev) = &self.rev else {
            return vec![true; n];
        };
        let bfs = |seen: &mut Vec<bool>, mut queue: VecDeque<usize>, skip_targets: bool| {
            while let Some(v) = queue.pop_front() {
                for &u in &rev[v] {
                    if !seen[u] && !(skip_targets && in_target[u]) {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        };
        let mut reach = vec![false; n];
        for &t in targets {
            reach[t] = true;
        }
        bfs(&mut reach, targets.iter().copied().collect(), false);
        let mut doomed: Vec<bool> = reach.iter().map(|r| !r).collect();
        let start: VecDeque<usize> = (0..n).filter(|&v| doomed[v]).collect();
        bfs(&mut doomed, start, true);
        doomed.iter().map(|d| !d).collect()
    }

    /// `E_i(τ_S)` for every state; `f64::INFINITY` where `S` is missed with
    /// positive probability.
    pub fn times_to(&self, targets: &[usize]) -> Result<Vec<f64>> {
        let n = self.matrix.dim();
        if targets.is_empty() {
            return Err(Error::param("target set is empty"));
        }
        let mut in_target = vec![false; n];
        for &t in targets {
            if t >= n {
                return Err(Error::IndexOutOfRange { row: t, col: t, dim: n });
            }
            in_target[t] = true;
        }
        let sure = self.sure_hitters(&in_target, targets);
        let transient: Vec<usize> = self
            .order
            .iter()
            .copied()
            .filter(|&s| !in_target[s] && sure[s])
            .collect();
        let h = absorption_reward(self.matrix, &transient, &in_target, |_| 1.0)?;
        let mut out: Vec<f64> = (0..n)
            .map(|s| if in_target[s] { 0.0 } else { f64::INFINITY })
            .collect();
        for (&s, v) in transient.iter().zip(h) {
            out[s] = v;
        }
        Ok(out)
    }
}

/// `E_i(τ_S)` for all states `i`; infinite where `S` is missed with
/// positive probability.
pub fn hitting_times(p: &StochasticMatrix, targets: &[usize]) -> Result<Vec<f64>> {
    HittingSolver::new(p).times_to(targets)
}

/// `E_start(τ_S)`, with `τ_S = min{t ≥ 0 : X_t ∈ S}`.
pub fn expected_hitting(p: &StochasticMatrix, targets: &[usize], start: usize) -> Result<f64> {
    if start >= p.dim() {
        return Err(Error::IndexOutOfRange {
            row: start,
            col: start,
            dim: p.dim(),
        });
    }
    let h = hitting_times(p, targets)?;
    let v = h[start];
    if v.is_infinite() {
        return Err(Error::InfiniteHittingTime {
            start,
            reason: "the chain can avoid the target set forever".into(),
        });
    }
    Ok(v)
}

fn require_irreducible(p: &StochasticMatrix) -> Result<()> {
    let comps = strongly_connected_components(&p.adjacency());
    if comps.len() != 1 {
        return Err(Error::Reducible { components: comps });
    }
    Ok(())
}

fn return_from_hitting(p: &StochasticMatrix, i: usize, h: &[f64]) -> f64 {
    1.0 + p.row_entries(i).map(|(j, q)| q * h[j]).sum::<f64>()
}

/// `E_i(τ_i⁺) = 1 + Σ_j P_ij E_j(τ_i)`.
pub fn expected_return(p: &StochasticMatrix, i: usize) -> Result<f64> {
    require_irreducible(p)?;
    let h = hitting_times(p, &[i])?;
    Ok(return_from_hitting(p, i, &h))
}

/// Largest `E_y(τ_target)` over `from`, with the maximising state.
pub fn max_hitting_from(p: &StochasticMatrix, from: &[usize], target: usize) -> Result<(usize, f64)> {
    let h = hitting_times(p, &[target])?;
    let mut best: Option<(usize, f64)> = None;
    for &y in from {
        let v = *h.get(y).ok_or(Error::IndexOutOfRange { row: y, col: y, dim: p.dim() })?;
        if best.is_none_or(|b| v > b.1) {
            best = Some((y, v));
        }
    }
    best.ok_or_else(|| Error::param("empty start set"))
}

/// Relative residual `max_i |h_i − 1 − Σ_j P_ij h_j| / (1 + h_i)` over the
/// states with finite hitting time outside the target set.
pub fn hitting_residual(p: &StochasticMatrix, targets: &[usize], h: &[f64]) -> f64 {
    (0..p.dim())
        .filter(|i| !targets.contains(i) && h[*i].is_finite())
        .map(|i| {
            let rhs = 1.0 + p.row_entries(i).map(|(j, q)| q * h[j]).sum::<f64>();
            (h[i] - rhs).abs() / (1.0 + h[i])
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct KacEntry {
    pub node: usize,
    pub pi: f64,
    pub expected_return: f64,
    /// `|π_i·E_i(τ_i⁺) − 1|`.
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KacReport {
    pub entries: Vec<KacEntry>,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Compares the stationary solve with one return-time solve per node.
pub fn kac_check(p: &StochasticMatrix, nodes: &[usize], tolerance: f64) -> Result<KacReport> {
    require_irreducible(p)?;
    let pi = stationary_direct(p)?;
    let solver = HittingSolver::new(p);
    let entries = nodes
        .par_iter()
        .map(|&i| {
            let h = solver.times_to(&[i])?;
            let ret = return_from_hitting(p, i, &h);
            Ok(KacEntry {
                node: i,
                pi: pi[i],
                expected_return: ret,
                deviation: (pi[i] * ret - 1.0).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(KacReport {
        pass: max_deviation <= tolerance,
        entries,
        tolerance,
        max_deviation,
    })
}

/// Switch to the driftless branch within this distance of `p = 1/2`.
const FAIR_EPS: f64 = 1e-12;

/// Expected absorption time of a walk on `0..=n` started at `k`, stepping
/// up with probability `p`, absorbed at `0` and `n`.
pub fn gamblers_ruin_expected(n: u32, p: f64, k: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("p = {p} outside (0, 1)")));
    }
    if k == 0 || k >= n {
        return Err(Error::param(format!("start {k} not strictly between 0 and {n}")));
    }
    let (kf, nf) = (f64::from(k), f64::from(n));
    if (p - 0.5).abs() < FAIR_EPS {
        return Ok(kf * (nf - kf));
    }
    let q = 1.0 - p;
    let r = q / p;
    let frac = (1.0 - r.powi(k as i32)) / (1.0 - r.powi(n as i32));
    Ok(kf / (q - p) - nf / (q - p) * frac)
}

/// The walk of [`gamblers_ruin_expected`] as an explicit chain with
/// absorbing barriers.
pub fn gamblers_ruin_chain(n: usize, p: f64) -> Result<StochasticMatrix> {
    if n < 2 || !(p > 0.0 && p < 1.0) {
        return Err(Error::param("gambler's ruin chain needs n >= 2 and 0 < p < 1"));
    }
    let rows = (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                vec![(i, 1.0)]
            } else {
                vec![(i - 1, 1.0 - p), (i + 1, p)]
            }
        })
        .collect();
    StochasticMatrix::new(SparseMatrix::from_rows(n + 1, rows)?, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::drift_line;

    fn sym_walk(n: usize) -> StochasticMatrix {
        gamblers_ruin_chain(n, 0.5).unwrap()
    }

    #[test]
    fn start_in_target_is_zero() {
        assert_eq!(expected_hitting(&sym_walk(4), &[0, 4], 0).unwrap(), 0.0);
    }

    #[test]
    fn one_step_absorption() {
        assert!((expected_hitting(&sym_walk(2), &[0, 2], 1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_walk_middle() {
        assert!((expected_hitting(&sym_walk(4), &[0, 4], 2).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn unreachable_target_is_infinite() {
        let p = sym_walk(4);
        // from 2 the walk is absorbed at 0 or 4 and may never reach 3
        assert!(matches!(expected_hitting(&p, &[3], 2), Err(Error::InfiniteHittingTime { .. })));
        let h = hitting_times(&p, &[3]).unwrap();
        assert!(h[0].is_infinite() && h[2].is_infinite());
    }

    #[test]
    fn return_times() {
        let cycle = StochasticMatrix::from_rows(3, vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]]).unwrap();
        for i in 0..3 {
            assert!((expected_return(&cycle, i).unwrap() - 3.0).abs() < 1e-14);
        }
        let line = drift_line(3, 1.0 / 3.0).unwrap();
        assert!((expected_return(&line.matrix, 0).unwrap() - 7.0 / 4.0).abs() < 1e-14);
        let red = StochasticMatrix::from_dense(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(expected_return(&red, 0), Err(Error::Reducible { .. })));
    }

    #[test]
    fn kac_on_cycle_is_exact() {
        let cycle = StochasticMatrix::from_rows(3, vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]]).unwrap();
        let r = kac_check(&cycle, &[0, 1, 2], 0.0).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn gamblers_ruin_small_cases() {
        for p in [0.1, 0.3, 0.5, 0.77] {
            assert!((gamblers_ruin_expected(2, p, 1).unwrap() - 1.0).abs() < 1e-14);
        }
        assert_eq!(gamblers_ruin_expected(4, 0.5, 2).unwrap(), 4.0);
        assert!(gamblers_ruin_expected(4, 0.5, 4).is_err());
        assert!(gamblers_ruin_expected(4, 1.0, 2).is_err());
    }

    #[test]
    fn gamblers_ruin_matches_linear_solve() {
        for (n, p, k) in [(6u32, 0.75, 1u32), (10, 0.25, 5)] {
            let chain = gamblers_ruin_chain(n as usize, p).unwrap();
            let solved = expected_hitting(&chain, &[0, n as usize], k as usize).unwrap();
            let closed = gamblers_ruin_expected(n, p, k).unwrap();
            assert!((solved - closed).abs() < 1e-10, "{n} {p} {k}: {solved} vs {closed}");
        }
    }

    #[test]
    fn growing_target_set_never_increases_time() {
        let p = drift_line(8, 0.4).unwrap().matrix;
        let a = hitting_times(&p, &[7]).unwrap();
        let b = hitting_times(&p, &[7, 3]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(y <= x);
        }
    }

    #[test]
    fn max_hitting_picks_farthest() {
        let p = sym_walk(6);
        let line = drift_line(6, 0.5).unwrap().matrix;
        let (y, v) = max_hitting_from(&line, &[1, 2, 5], 0).unwrap();
        assert_eq!(y, 5);
        assert!(v > 0.0);
        assert!(max_hitting_from(&p, &[], 0).is_err());
    }
}
