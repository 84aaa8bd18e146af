//! Symmetric conductance matrices and the reversible chains they induce.

use crate::error::{Error, Result};
use crate::matrix::{SparseMatrix, StochasticMatrix, DEFAULT_TOLERANCE};
use crate::structure::strongly_connected_components;

/// Symmetric nonnegative edge weights with values from a declared finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceMatrix {
    weights: SparseMatrix,
    values: Vec<f64>,
}

impl ConductanceMatrix {
    /// Validates exact symmetry, membership of every entry in `values`, and
    /// a positive row sum at every vertex.
    pub fn new(weights: SparseMatrix, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::param("conductance value set must be finite positive reals"));
        }
        for i in 0..weights.dim() {
            if weights.row(i).0.is_empty() {
                return Err(Error::param(format!("vertex {i} has zero total conductance")));
            }
            for (j, c) in weights.row_entries(i) {
                if !values.contains(&c) {
                    return Err(Error::InvalidEntry {
                        row: i,
                        col: j,
                        value: c,
                    });
                }
                if weights.get(j, i) != c {
                    return Err(Error::param(format!("conductance not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { weights, values })
    }

    pub fn dim(&self) -> usize {
        self.weights.dim()
    }

    pub fn weights(&self) -> &SparseMatrix {
        &self.weights
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `C_i = Σ_j C_ij`.
    pub fn vertex_weights(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.weights.row_sum(i)).collect()
    }

    pub fn is_connected(&self) -> bool {
        strongly_connected_components(&self.weights.adjacency()).len() == 1
    }

    /// Multiplies every conductance (and the value set) by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let rows = self
            .weights
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|(j, c)| (j, c * factor)).collect())
            .collect();
        Self::new(
            SparseMatrix::from_rows(self.dim(), rows)?,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }
}

/// The reversible chain `P_ij = C_ij / C_i`.
pub fn from_conductance(c: &ConductanceMatrix) -> Result<StochasticMatrix> {
    if !c.is_connected() {
        return Err(Error::param("conductance graph is disconnected"));
    }
    let rows = (0..c.dim())
        .map(|i| {
            let total = c.weights.row_sum(i);
            c.weights.row_entries(i).map(|(j, w)| (j, w / total)).collect()
        })
        .collect();
    StochasticMatrix::new(SparseMatrix::from_rows(c.dim(), rows)?, DEFAULT_TOLERANCE)
}
