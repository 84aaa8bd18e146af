//! Consensus weight vectors: direct and iterative solvers, the reversible
//! closed form, and the degree bound.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conductance::ConductanceMatrix;
use crate::error::{Error, Result};
use crate::matrix::{ProbabilityVector, StochasticMatrix};
use crate::reduction::{rcm_order, stationary_gth};
use crate::srw::undirected_srw_form;
use crate::structure::strongly_connected_components;

/// Residual bound `‖πᵀP − πᵀ‖₁` enforced on direct solves.
pub const DIRECT_RESIDUAL_TOL: f64 = 1e-10;
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Power,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Power => "power",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Method::Direct),
            "power" => Ok(Method::Power),
            _ => Err(Error::param(format!("unknown solver {s:?} (direct|power)"))),
        }
    }
}

/// A solved stationary vector with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct Stationary {
    pub pi: ProbabilityVector,
    pub method: Method,
    /// `‖πᵀP − πᵀ‖₁` against the original matrix.
    pub residual: f64,
    pub iterations: usize,
}

pub fn solve(p: &StochasticMatrix, method: Method) -> Result<Stationary> {
    match method {
        Method::Direct => {
            let pi = stationary_direct(p)?;
            let residual = p.stationarity_residual(pi.as_slice());
            Ok(Stationary {
                pi,
                method,
                residual,
                iterations: 0,
            })
        }
        Method::Power => {
            let (pi, iterations) = power_iterate(p, POWER_TOL, POWER_MAX_ITER)?;
            let residual = p.stationarity_residual(pi.as_slice());
            Ok(Stationary {
                pi,
                method,
                residual,
                iterations,
            })
        }
    }
}

/// Stationary vector of an irreducible chain by banded state reduction.
///
/// Reducible input fails with its strongly connected components.
pub fn stationary_direct(p: &StochasticMatrix) -> Result<ProbabilityVector> {
    let adj = p.adjacency();
    let comps = strongly_connected_components(&adj);
    if comps.len() != 1 {
        return Err(Error::Reducible { components: comps });
    }
    let raw = stationary_gth(p, &rcm_order(&adj))?;
    let pi = ProbabilityVector::normalized(raw)?;
    let residual = p.stationarity_residual(pi.as_slice());
    if !(residual <= DIRECT_RESIDUAL_TOL) {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: DIRECT_RESIDUAL_TOL,
        });
    }
    Ok(pi)
}

/// Power iteration on the lazy chain `(P + I)/2` from the uniform vector.
///
/// Stops once the L1 change is at most `tol` and the geometric tail bound
/// `change·ρ/(1−ρ)`, with `ρ` the largest recent contraction ratio, is also
/// at most `tol`, or once the change is down at the rounding level.
pub fn stationary_power(p: &StochasticMatrix, tol: f64, max_iter: usize) -> Result<ProbabilityVector> {
    power_iterate(p, tol, max_iter).map(|(pi, _)| pi)
}

const RATIO_WINDOW: usize = 8;

fn power_iterate(p: &StochasticMatrix, tol: f64, max_iter: usize) -> Result<(ProbabilityVector, usize)> {
    if !(tol > 0.0) {
        return Err(Error::param("power tolerance must be positive"));
    }
    let adj = p.adjacency();
    let comps = strongly_connected_components(&adj);
    if comps.len() != 1 {
        return Err(Error::Reducible { components: comps });
    }
    let n = p.dim();
    let mut x = vec![1.0 / n as f64; n];
    let noise_floor = 16.0 * n as f64 * f64::EPSILON;
    let mut ratios = [f64::INFINITY; RATIO_WINDOW];
    let mut prev_change = f64::INFINITY;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let xp = p.left_mul(&x);
        let mut next: Vec<f64> = xp.iter().zip(&x).map(|(a, b)| 0.5 * (a + b)).collect();
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= sum);
        change = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change == 0.0 {
            return Ok((ProbabilityVector::normalized(x)?, it));
        }
        ratios[it % RATIO_WINDOW] = change / prev_change;
        prev_change = change;
        if change <= tol && it > RATIO_WINDOW {
            let rho = ratios.iter().copied().fold(0.0, f64::max);
            // at the rounding floor the ratios stop meaning anything
            if change <= noise_floor || (rho < 1.0 && change * rho / (1.0 - rho) <= tol) {
                return Ok((ProbabilityVector::normalized(x)?, it));
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        change,
        last: x,
    })
}

/// `π_i = C_i / Σ_j C_j`.
pub fn reversible_stationary(c: &ConductanceMatrix) -> Result<ProbabilityVector> {
    if !c.is_connected() {
        return Err(Error::param("conductance graph is disconnected"));
    }
    ProbabilityVector::normalized(c.vertex_weights())
}

/// `d_max / |E|` for a lazy simple random walk on an undirected graph, with
/// `|E|` counting ordered neighbour pairs.
pub fn degree_bound(p: &StochasticMatrix) -> Result<f64> {
    let form = undirected_srw_form(p)?;
    Ok(form.max_degree() as f64 / form.directed_edge_count() as f64)
}
