//! Banded state-reduction solvers.
//!
//! Both solvers eliminate states one at a time in a reverse Cuthill–McKee
//! order, so fill-in stays inside the band of the reordered pattern. Every
//! update is a sum of nonnegative terms; the diagonal is never formed by
//! subtraction, which keeps tiny stationary weights and large hitting times
//! accurate to relative precision.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::matrix::StochasticMatrix;

/// Reverse Cuthill–McKee ordering of the symmetrised nonzero pattern.
pub fn rcm_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut nbrs = vec![Vec::new(); n];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            if u != v {
                nbrs[u].push(v);
                nbrs[v].push(u);
            }
        }
    }
    for list in &mut nbrs {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = nbrs.iter().map(Vec::len).collect();
    for list in &mut nbrs {
        list.sort_by_key(|&v| (degree[v], v));
    }

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    for &seed in &by_degree {
        if placed[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &nbrs, &degree, &mut level);
        placed[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &nbrs[u] {
                if !placed[v] {
                    placed[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, nbrs: &[Vec<usize>], level: &mut [usize]) -> Vec<usize> {
    let mut visited = vec![start];
    level[start] = 0;
    let mut head = 0;
    while head < visited.len() {
        let u = visited[head];
        head += 1;
        for &v in &nbrs[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                visited.push(v);
            }
        }
    }
    visited
}

fn pseudo_peripheral(seed: usize, nbrs: &[Vec<usize>], degree: &[usize], level: &mut [usize]) -> usize {
    let mut start = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let visited = bfs_levels(start, nbrs, level);
        let far = level[*visited.last().unwrap()];
        let candidate = visited
            .iter()
            .copied()
            .filter(|&v| level[v] == far)
            .min_by_key(|&v| (degree[v], v))
            .unwrap();
        for &v in &visited {
            level[v] = usize::MAX;
        }
        if far <= ecc {
            break;
        }
        ecc = far;
        start = candidate;
    }
    start
}

/// Square band of half-width `bw` over positions `0..n`.
struct Band {
    n: usize,
    bw: usize,
    width: usize,
    data: Vec<f64>,
}

impl Band {
    fn new(n: usize, bw: usize) -> Self {
        let width = 2 * bw + 1;
        Self {
            n,
            bw,
            width,
            data: vec![0.0; n * width],
        }
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.bw - r)
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[self.idx(r, c)]
    }

    #[inline]
    fn add(&mut self, r: usize, c: usize, v: f64) {
        let i = self.idx(r, c);
        self.data[i] += v;
    }

    fn hi(&self, k: usize) -> usize {
        (k + self.bw).min(self.n - 1)
    }

    /// Adds `f·row(k)` to `row(r)` over columns `(k, hi]`, for `k < r`.
    /// The diagonal slot of `r` is left at zero.
    #[inline]
    fn axpy_row(&mut self, r: usize, k: usize, f: f64) {
        debug_assert!(k < r && r <= k + self.bw);
        let len = self.hi(k) - k;
        let (head, tail) = self.data.split_at_mut(r * self.width);
        let src = &head[k * self.width + self.bw + 1..][..len];
        let dst = &mut tail[k + 1 + self.bw - r..][..len];
        for (d, s) in dst.iter_mut().zip(src) {
            *d += f * s;
        }
        tail[self.bw] = 0.0;
    }
}

/// Positions of `states` in the given order and the resulting half-bandwidth
/// of the induced pattern.
fn layout(matrix: &StochasticMatrix, states: &[usize]) -> (Vec<usize>, usize) {
    let mut pos = vec![usize::MAX; matrix.dim()];
    for (k, &s) in states.iter().enumerate() {
        pos[s] = k;
    }
    let mut bw = 0;
    for (r, &s) in states.iter().enumerate() {
        for (j, _) in matrix.row_entries(s) {
            let c = pos[j];
            if c != usize::MAX {
                bw = bw.max(r.abs_diff(c));
            }
        }
    }
    (pos, bw)
}

const RESCALE_ABOVE: f64 = 1e200;

/// Unnormalised stationary vector of an irreducible chain by GTH state
/// reduction along `order` (a permutation of all states).
pub fn stationary_gth(matrix: &StochasticMatrix, order: &[usize]) -> Result<Vec<f64>> {
    let n = matrix.dim();
    debug_assert_eq!(order.len(), n);
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let (pos, bw) = layout(matrix, order);
    let mut band = Band::new(n, bw);
    for (r, &s) in order.iter().enumerate() {
        for (j, p) in matrix.row_entries(s) {
            let c = pos[j];
            if c != r {
                band.add(r, c, p);
            }
        }
    }

    let mut outflow = vec![0.0; n];
    for k in 0..n - 1 {
        let hi = band.hi(k);
        let s: f64 = (k + 1..=hi).map(|c| band.get(k, c)).sum();
        if !(s > 0.0) {
            return Err(Error::Breakdown { state: order[k] });
        }
        outflow[k] = s;
        for r in k + 1..=hi {
            let into_k = band.get(r, k);
            if into_k != 0.0 {
                band.axpy_row(r, k, into_k / s);
            }
        }
    }

    let mut x = vec![0.0; n];
    x[n - 1] = 1.0;
    for k in (0..n - 1).rev() {
        let hi = band.hi(k);
        let inflow: f64 = (k + 1..=hi).map(|r| x[r] * band.get(r, k)).sum();
        x[k] = inflow / outflow[k];
        if x[k] > RESCALE_ABOVE {
            x[k..].iter_mut().for_each(|v| *v /= RESCALE_ABOVE);
        }
    }
    let mut out = vec![0.0; n];
    for (k, &s) in order.iter().enumerate() {
        out[s] = x[k];
    }
    Ok(out)
}

/// Expected accumulated reward before absorption, for an absorbing chain
/// whose transient states are `transient` (in elimination order) and whose
/// absorbing set is `target`.
///
/// Every transient state must hit `target` with probability one; the caller
/// filters out states that do not. `reward[s]` is collected at each visit to
/// transient state `s`. Returns one value per entry of `transient`.
pub fn absorption_reward(
    matrix: &StochasticMatrix,
    transient: &[usize],
    target: &[bool],
    reward: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    let n = transient.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (pos, bw) = layout(matrix, transient);
    let mut band = Band::new(n, bw);
    let mut exit = vec![0.0; n];
    let mut acc: Vec<f64> = transient.iter().map(|&s| reward(s)).collect();
    for (r, &s) in transient.iter().enumerate() {
        for (j, p) in matrix.row_entries(s) {
            if target[j] {
                exit[r] += p;
            } else {
                let c = pos[j];
                if c == usize::MAX {
                    return Err(Error::InfiniteHittingTime {
                        start: s,
                        reason: format!("state {s} leads to state {j} outside the solve set"),
                    });
                }
                if c != r {
                    band.add(r, c, p);
                }
            }
        }
    }

    let mut outflow = vec![0.0; n];
    for k in 0..n {
        let hi = band.hi(k);
        let d = exit[k] + (k + 1..=hi).map(|c| band.get(k, c)).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::Breakdown {
                state: transient[k],
            });
        }
        outflow[k] = d;
        for r in k + 1..=hi {
            let into_k = band.get(r, k);
            if into_k != 0.0 {
                let f = into_k / d;
                band.axpy_row(r, k, f);
                exit[r] += f * exit[k];
                acc[r] += f * acc[k];
            }
        }
    }

    let mut h = vec![0.0; n];
    for k in (0..n).rev() {
        let hi = band.hi(k);
        let onward: f64 = (k + 1..=hi).map(|c| band.get(k, c) * h[c]).sum();
        h[k] = (acc[k] + onward) / outflow[k];
    }
    Ok(h)
}
