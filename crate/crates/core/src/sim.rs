//! Seeded Monte Carlo trajectories, used as an independent check on the
//! linear solvers.
//!
//! Sample `k` draws from its own ChaCha8 stream `(seed, k)`, so results do not
//! depend on how samples are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ProbabilityVector, StochasticMatrix};
use crate::structure::strongly_connected_components;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub estimate: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
    /// Samples that hit the step cap and were left out of the estimate.
    pub step_cap_hits: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub step_cap: u64,
    /// Drop capped samples instead of failing. The estimate is then biased
    /// low and only useful as a diagnostic.
    pub allow_capped: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            step_cap: DEFAULT_STEP_CAP,
            allow_capped: false,
        }
    }
}

fn require_irreducible(p: &StochasticMatrix) -> Result<()> {
    let comps = strongly_connected_components(&p.adjacency());
    if comps.len() != 1 {
        return Err(Error::Reducible { components: comps });
    }
    Ok(())
}

/// Inverse-CDF draw from row `i`.
#[inline]
fn step(p: &StochasticMatrix, i: usize, rng: &mut ChaCha8Rng) -> usize {
    let (cols, vals) = p.row(i);
    if cols.len() == 1 {
        return cols[0];
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (&j, &v) in cols.iter().zip(vals) {
        acc += v;
        if u < acc {
            return j;
        }
    }
    // rounding left a sliver above the last partial sum
    cols[cols.len() - 1]
}

pub fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One realisation of `τ_i⁺`, or `None` past the cap.
fn return_time(p: &StochasticMatrix, i: usize, cap: u64, rng: &mut ChaCha8Rng) -> Option<u64> {
    let mut x = i;
    for t in 1..=cap {
        x = step(p, x, rng);
        if x == i {
            return Some(t);
        }
    }
    None
}

/// Mean of `samples` independent return times to `i`, with its standard
/// error.
pub fn simulate_return_time(p: &StochasticMatrix, i: usize, samples: u64, seed: u64) -> Result<SimResult> {
    simulate_return_time_with(p, i, samples, seed, SimOptions::default())
}

pub fn simulate_return_time_with(
    p: &StochasticMatrix,
    i: usize,
    samples: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<SimResult> {
    if samples == 0 {
        return Err(Error::param("need at least one sample"));
    }
    if i >= p.dim() {
        return Err(Error::IndexOutOfRange { row: i, col: i, dim: p.dim() });
    }
    require_irreducible(p)?;
    let times: Vec<Option<u64>> = (0..samples)
        .into_par_iter()
        .map(|k| return_time(p, i, opts.step_cap, &mut sample_rng(seed, k)))
        .collect();
    let hits = times.iter().filter(|t| t.is_none()).count() as u64;
    if hits > 0 && !opts.allow_capped {
        let first = times.iter().position(Option::is_none).unwrap() as u64;
        return Err(Error::StepCapExceeded {
            sample: first,
            cap: opts.step_cap,
            hits,
        });
    }
    let kept: Vec<f64> = times.into_iter().flatten().map(|t| t as f64).collect();
    if kept.is_empty() {
        return Err(Error::StepCapExceeded {
            sample: 0,
            cap: opts.step_cap,
            hits,
        });
    }
    let (mean, se) = mean_and_error(&kept);
    Ok(SimResult {
        estimate: mean,
        standard_error: se,
        samples: kept.len() as u64,
        seed,
        step_cap_hits: hits,
    })
}

/// Sample mean and standard error of the mean (zero for a single sample).
fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Occupation frequencies of one trajectory from state 0, counting the
/// states visited at times `burn_in + 1 ..= steps`.
pub fn estimate_stationary_occupation(
    p: &StochasticMatrix,
    steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<ProbabilityVector> {
    if steps <= burn_in {
        return Err(Error::param(format!("steps ({steps}) must exceed burn-in ({burn_in})")));
    }
    require_irreducible(p)?;
    let mut rng = sample_rng(seed, 0);
    let mut counts = vec![0u64; p.dim()];
    let mut x = 0;
    for _ in 0..burn_in {
        x = step(p, x, &mut rng);
    }
    for _ in burn_in..steps {
        x = step(p, x, &mut rng);
        counts[x] += 1;
    }
    let total = (steps - burn_in) as f64;
    ProbabilityVector::normalized(counts.into_iter().map(|c| c as f64 / total).collect())
}
