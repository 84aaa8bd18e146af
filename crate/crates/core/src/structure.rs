//! Graph structure of the nonzero pattern: strongly connected components,
//! periods, reachability and neighbourhood balls.

use std::collections::VecDeque;

use serde::Serialize;

use crate::matrix::{SparseMatrix, StochasticMatrix};

/// Tarjan's algorithm, iterative. Components come out in reverse
/// topological order; states inside a component are sorted.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut next = 0;
    // (node, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components
}

pub fn is_irreducible(matrix: &StochasticMatrix) -> bool {
    strongly_connected_components(&matrix.adjacency()).len() == 1
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Period of every strongly connected component, `None` for a component
/// with no internal edge (a single transient state without self-loop).
pub fn component_periods(adj: &[Vec<usize>]) -> Vec<(Vec<usize>, Option<usize>)> {
    let comps = strongly_connected_components(adj);
    let mut comp_of = vec![0; adj.len()];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    let mut level = vec![usize::MAX; adj.len()];
    comps
        .into_iter()
        .enumerate()
        .map(|(c, comp)| {
            let root = comp[0];
            level[root] = 0;
            let mut queue = VecDeque::from([root]);
            let mut period = 0;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if comp_of[v] != c {
                        continue;
                    }
                    if level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    } else {
                        // level[v] <= level[u] + 1 by BFS order
                        period = gcd(period, level[u] + 1 - level[v]);
                    }
                }
            }
            let has_edge = comp.iter().any(|&u| adj[u].iter().any(|&v| comp_of[v] == c));
            (comp, if has_edge { Some(period) } else { None })
        })
        .collect()
}

/// True when every component carrying a cycle has period 1.
pub fn is_aperiodic(matrix: &StochasticMatrix) -> bool {
    component_periods(&matrix.adjacency())
        .iter()
        .all(|(_, p)| p.map_or(true, |p| p == 1))
}

/// States that can reach some state of `targets` (targets included).
pub fn can_reach(adj: &[Vec<usize>], targets: &[usize]) -> Vec<bool> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            rev[v].push(u);
        }
    }
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::new();
    for &t in targets {
        if !seen[t] {
            seen[t] = true;
            queue.push_back(t);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen
}

/// Breadth-first distances from `center` over edges taken in either
/// direction; unreachable states get `None`.
pub fn symmetric_distances(adj: &[Vec<usize>], center: usize) -> Vec<Option<usize>> {
    let n = adj.len();
    let mut undirected = vec![Vec::new(); n];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            if u != v {
                undirected[u].push(v);
                undirected[v].push(u);
            }
        }
    }
    let mut dist = vec![None; n];
    dist[center] = Some(0);
    let mut queue = VecDeque::from([center]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &v in &undirected[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// How distances in a [`BallExtract`] were measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BallDistance {
    /// Either edge direction counts as one hop.
    Symmetrized,
}

/// The restriction of a chain to `B(center, radius)`.
///
/// Rows are not renormalised: boundary rows that lose mass to states outside
/// the ball are substochastic and listed in `boundary_rows`.
#[derive(Debug, Clone)]
pub struct BallExtract {
    pub submatrix: SparseMatrix,
    /// Ball-local index to original index; local 0 is the center.
    pub vertex_map: Vec<usize>,
    pub center: usize,
    pub radius: usize,
    /// Distance from the center of each local vertex.
    pub distances: Vec<usize>,
    /// Local indices whose row sums to less than one.
    pub boundary_rows: Vec<usize>,
    pub distance: BallDistance,
}

pub fn extract_ball(matrix: &StochasticMatrix, center: usize, radius: usize) -> BallExtract {
    assert!(center < matrix.dim(), "ball center out of range");
    let dist = symmetric_distances(&matrix.adjacency(), center);
    let mut members: Vec<(usize, usize)> = dist
        .iter()
        .enumerate()
        .filter_map(|(v, d)| d.filter(|&d| d <= radius).map(|d| (d, v)))
        .collect();
    // center first, then by distance, then by original index
    members.sort_unstable();
    let vertex_map: Vec<usize> = members.iter().map(|&(_, v)| v).collect();
    let distances = members.iter().map(|&(d, _)| d).collect();
    let mut local = vec![usize::MAX; matrix.dim()];
    for (k, &v) in vertex_map.iter().enumerate() {
        local[v] = k;
    }
    let rows: Vec<Vec<(usize, f64)>> = vertex_map
        .iter()
        .map(|&v| {
            matrix
                .row_entries(v)
                .filter(|&(j, _)| local[j] != usize::MAX)
                .map(|(j, p)| (local[j], p))
                .collect()
        })
        .collect();
    let boundary_rows = rows
        .iter()
        .enumerate()
        .filter(|(k, r)| r.len() < matrix.row(vertex_map[*k]).0.len())
        .map(|(k, _)| k)
        .collect();
    let submatrix =
        SparseMatrix::from_rows(vertex_map.len(), rows).expect("ball rows are well formed");
    BallExtract {
        submatrix,
        vertex_map,
        center,
        radius,
        distances,
        boundary_rows,
        distance: BallDistance::Symmetrized,
    }
}
