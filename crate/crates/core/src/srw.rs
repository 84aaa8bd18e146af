//! Recognising lazy simple random walks.

use crate::error::{Error, Result};
use crate::matrix::StochasticMatrix;

const SRW_TOL: f64 = 1e-12;

/// Shape of a lazy simple random walk: a common self-loop `tau` and, on
/// every row, the remaining mass split evenly over the out-neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct SrwForm {
    pub tau: f64,
    /// Off-diagonal out-neighbours per state.
    pub neighbors: Vec<Vec<usize>>,
    /// Whether the neighbour relation is symmetric.
    pub undirected: bool,
}

impl SrwForm {
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Number of ordered neighbour pairs.
    pub fn directed_edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }
}

pub fn srw_form(p: &StochasticMatrix) -> Result<SrwForm> {
    let tau = p.get(0, 0);
    let mut neighbors = Vec::with_capacity(p.dim());
    for i in 0..p.dim() {
        let self_loop = p.get(i, i);
        if (self_loop - tau).abs() > SRW_TOL {
            return Err(Error::NotSrwForm(format!(
                "self-loop {self_loop} at state {i} differs from {tau} at state 0"
            )));
        }
        let off: Vec<(usize, f64)> = p.row_entries(i).filter(|&(j, _)| j != i).collect();
        if off.is_empty() {
            return Err(Error::NotSrwForm(format!("state {i} has no neighbours")));
        }
        let expected = (1.0 - tau) / off.len() as f64;
        if let Some(&(j, w)) = off.iter().find(|&&(_, w)| (w - expected).abs() > SRW_TOL) {
            return Err(Error::NotSrwForm(format!(
                "P[{i}][{j}] = {w}, expected {expected} for degree {}",
                off.len()
            )));
        }
        neighbors.push(off.into_iter().map(|(j, _)| j).collect::<Vec<_>>());
    }
    let undirected = neighbors
        .iter()
        .enumerate()
        .all(|(i, nb)| nb.iter().all(|&j| neighbors[j].binary_search(&i).is_ok()));
    Ok(SrwForm {
        tau,
        neighbors,
        undirected,
    })
}

/// Like [`srw_form`] but also requires an undirected neighbour relation.
pub fn undirected_srw_form(p: &StochasticMatrix) -> Result<SrwForm> {
    let form = srw_form(p)?;
    if !form.undirected {
        return Err(Error::NotSrwForm("neighbour relation is not symmetric".into()));
    }
    Ok(form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{directed_torus, drift_line, lazy_srw_grid};

    #[test]
    fn grid_is_srw() {
        let g = lazy_srw_grid(2, 2, 0.1).unwrap();
        let f = undirected_srw_form(&g.matrix).unwrap();
        assert_eq!(f.tau, 0.1);
        assert_eq!(f.max_degree(), 4);
        assert_eq!(f.directed_edge_count(), 2 * 2 * 5 * 4);
    }

    #[test]
    fn directed_torus_is_directed_srw() {
        let t = directed_torus(2, 1).unwrap();
        let f = srw_form(&t.matrix).unwrap();
        assert!(!f.undirected);
        assert!(undirected_srw_form(&t.matrix).is_err());
    }

    #[test]
    fn drift_line_is_not_srw() {
        assert!(srw_form(&drift_line(4, 0.3).unwrap().matrix).is_err());
    }
}
