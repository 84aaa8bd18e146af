//! Sparse row-major matrices and the validated stochastic wrapper.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on row sums for constructed stochastic matrices.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Compressed sparse row matrix with no value constraints.
///
/// Column indices within a row are strictly increasing and exact zeros are
/// not stored. This is the raw form consumed by [`check_stochastic`] and the
/// shape used for ball restrictions, whose boundary rows are substochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from per-row `(column, value)` lists in any order.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        if rows.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: rows.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (row, mut entries) in rows.into_iter().enumerate() {
            entries.sort_by_key(|&(c, _)| c);
            let mut prev: Option<usize> = None;
            for (col, value) in entries {
                if col >= dim {
                    return Err(Error::IndexOutOfRange { row, col, dim });
                }
                if prev == Some(col) {
                    return Err(Error::DuplicateEntry { row, col });
                }
                prev = Some(col);
                if value != 0.0 {
                    cols.push(col);
                    vals.push(value);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let sparse = rows
            .iter()
            .map(|r| {
                if r.len() != dim {
                    return Err(Error::DimensionMismatch {
                        left: dim,
                        right: r.len(),
                    });
                }
                Ok(r.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(dim, sparse)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.row(i);
        c.iter().copied().zip(v.iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    /// Row lists, the inverse of [`SparseMatrix::from_rows`].
    pub fn to_rows(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.dim).map(|i| self.row_entries(i).collect()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, p) in self.row_entries(i) {
                row[j] = p;
            }
        }
        out
    }

    /// Out-neighbour lists of the nonzero pattern.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.dim).map(|i| self.row(i).0.to_vec()).collect()
    }
}

/// Outcome of [`check_stochastic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub worst_row_sum_error: f64,
    /// Worst offending row, if any row exceeds the tolerance.
    pub worst_row: Option<usize>,
    pub negative_entries: Vec<(usize, usize)>,
    pub tolerance: f64,
}

/// Reports rows whose sum is off by more than `tolerance` and any negative entry.
pub fn check_stochastic(matrix: &SparseMatrix, tolerance: f64) -> ValidationReport {
    let mut worst = 0.0_f64;
    let mut worst_row = None;
    let mut negative_entries = Vec::new();
    for i in 0..matrix.dim() {
        let err = (matrix.row_sum(i) - 1.0).abs();
        if err > worst || err.is_nan() {
            worst = if err.is_nan() { f64::INFINITY } else { err };
            worst_row = Some(i);
        }
        for (j, p) in matrix.row_entries(i) {
            if p < 0.0 || p.is_nan() {
                negative_entries.push((i, j));
            }
        }
    }
    let ok = worst <= tolerance && negative_entries.is_empty();
    ValidationReport {
        ok,
        worst_row_sum_error: worst,
        worst_row: if worst > tolerance { worst_row } else { None },
        negative_entries,
        tolerance,
    }
}

/// Row-stochastic sparse matrix: every stored entry lies in (0, 1] and every
/// row sums to one within the matrix tolerance.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    inner: SparseMatrix,
    tolerance: f64,
}

impl StochasticMatrix {
    pub fn new(inner: SparseMatrix, tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0) {
            return Err(Error::param(format!("tolerance {tolerance} must be >= 0")));
        }
        for i in 0..inner.dim() {
            for (j, p) in inner.row_entries(i) {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidEntry {
                        row: i,
                        col: j,
                        value: p,
                    });
                }
            }
            let sum = inner.row_sum(i);
            if !((sum - 1.0).abs() <= tolerance) {
                return Err(Error::RowSum {
                    row: i,
                    sum,
                    tolerance,
                });
            }
        }
        Ok(Self { inner, tolerance })
    }

    /// Validates at [`DEFAULT_TOLERANCE`].
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        Self::new(SparseMatrix::from_rows(dim, rows)?, DEFAULT_TOLERANCE)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SparseMatrix::from_dense(rows)?, DEFAULT_TOLERANCE)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn as_sparse(&self) -> &SparseMatrix {
        &self.inner
    }

    pub fn into_sparse(self) -> SparseMatrix {
        self.inner
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        self.inner.row(i)
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.inner.row_entries(i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn to_rows(&self) -> Vec<Vec<(usize, f64)>> {
        self.inner.to_rows()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.inner.to_dense()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.inner.adjacency()
    }

    /// Row vector times matrix: `xᵀP`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, p) in self.row_entries(i) {
                out[j] += xi * p;
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.left_mul(&vec![1.0; self.dim()])
    }

    /// `‖xᵀP − xᵀ‖₁`.
    pub fn stationarity_residual(&self, x: &[f64]) -> f64 {
        self.left_mul(x)
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Entrywise convex combination `weight·p + (1 − weight)·q`.
///
/// The result keeps the stricter of the two input tolerances.
pub fn blend(p: &StochasticMatrix, q: &StochasticMatrix, weight: f64) -> Result<StochasticMatrix> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::param(format!("blend weight {weight} outside [0, 1]")));
    }
    let (wp, wq) = (weight, 1.0 - weight);
    let rows = (0..p.dim())
        .map(|i| {
            let (pc, pv) = p.row(i);
            let (qc, qv) = q.row(i);
            let mut row = Vec::with_capacity(pc.len().max(qc.len()));
            let (mut a, mut b) = (0, 0);
            while a < pc.len() || b < qc.len() {
                let ca = pc.get(a).copied().unwrap_or(usize::MAX);
                let cb = qc.get(b).copied().unwrap_or(usize::MAX);
                let col = ca.min(cb);
                let x = if ca == col {
                    a += 1;
                    pv[a - 1]
                } else {
                    0.0
                };
                let y = if cb == col {
                    b += 1;
                    qv[b - 1]
                } else {
                    0.0
                };
                row.push((col, wp * x + wq * y));
            }
            row
        })
        .collect();
    let tol = p.tolerance().min(q.tolerance());
    StochasticMatrix::new(SparseMatrix::from_rows(p.dim(), rows)?, tol)
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(Error::InvalidEntry {
                row: i,
                col: 0,
                value: w,
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::RowSum {
                row: 0,
                sum,
                tolerance: Self::SUM_TOLERANCE,
            });
        }
        Ok(Self { weights })
    }

    /// Rescales nonnegative finite weights to unit sum.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::param(format!("cannot normalise weights with sum {sum}")));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the largest weight; the first index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}
