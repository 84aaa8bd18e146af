//! Named identity checks, run on a user matrix or on a built-in corpus.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{conductance_grid, directed_torus, drift_cycle, drift_line, grid_conductance, lazy_srw_grid, lazy_torus};
use crate::hitting::{expected_hitting, gamblers_ruin_chain, gamblers_ruin_expected, kac_check};
use crate::matrix::StochasticMatrix;
use crate::perturb::{box_community, PerturbationSpec};
use crate::stationary::{degree_bound, reversible_stationary, stationary_direct};

pub const KAC_TOL: f64 = 1e-8;
pub const CLOSED_FORM_TOL: f64 = 1e-12;
pub const REVERSIBLE_TOL: f64 = 1e-12;
pub const DEGREE_BOUND_TOL: f64 = 1e-12;
pub const GAMBLER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Kac,
    Reversible,
    DegreeBound,
    ClosedForm,
    GamblersRuin,
}

impl CheckName {
    pub const ALL: [CheckName; 5] = [
        CheckName::Kac,
        CheckName::Reversible,
        CheckName::DegreeBound,
        CheckName::ClosedForm,
        CheckName::GamblersRuin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Kac => "kac",
            CheckName::Reversible => "reversible",
            CheckName::DegreeBound => "degree_bound",
            CheckName::ClosedForm => "closed_form",
            CheckName::GamblersRuin => "gamblers_ruin",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::param(format!("unknown check {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: CheckName,
    pub target: String,
    pub status: Status,
    pub deviation: Option<f64>,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    fn measured(check: CheckName, target: &str, deviation: f64, threshold: f64, detail: String) -> Self {
        Self {
            check,
            target: target.into(),
            status: if deviation <= threshold { Status::Pass } else { Status::Fail },
            deviation: Some(deviation),
            threshold,
            detail,
        }
    }

    fn skipped(check: CheckName, target: &str, threshold: f64, reason: impl Into<String>) -> Self {
        Self {
            check,
            target: target.into(),
            status: Status::Skipped,
            deviation: None,
            threshold,
            detail: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub results: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn new(results: Vec<CheckResult>) -> Self {
        Self {
            pass: results.iter().all(|r| r.status != Status::Fail),
            results,
        }
    }
}

/// Closed-form stationary vector of [`drift_line`]: `π_i ∝ r^{i−1}` with
/// `r = δ/(1−δ)`, evaluated without overflow.
pub fn drift_line_closed_form(n: usize, delta: f64) -> Vec<f64> {
    let r = delta / (1.0 - delta);
    if r == 1.0 {
        return vec![1.0 / n as f64; n];
    }
    if r < 1.0 {
        let norm = (1.0 - r) / (1.0 - r.powi(n as i32));
        (0..n).map(|i| r.powi(i as i32) * norm).collect()
    } else {
        let s = 1.0 / r;
        let norm = (1.0 - s) / (1.0 - s.powi(n as i32));
        (0..n).map(|i| s.powi((n - 1 - i) as i32) * norm).collect()
    }
}

/// Runs one check against a given matrix. Checks that need structure the
/// matrix does not have come back skipped with the reason.
pub fn check_matrix(check: CheckName, target: &str, p: &StochasticMatrix, kac_tol: f64) -> Result<CheckResult> {
    Ok(match check {
        CheckName::Kac => {
            let nodes: Vec<usize> = (0..p.dim()).collect();
            let report = kac_check(p, &nodes, kac_tol)?;
            let worst = report
                .entries
                .iter()
                .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
                .map(|e| e.node)
                .unwrap_or(0);
            CheckResult::measured(
                check,
                target,
                report.max_deviation,
                kac_tol,
                format!("{} nodes, worst at state {worst}", nodes.len()),
            )
        }
        CheckName::DegreeBound => match degree_bound(p) {
            Ok(bound) => {
                let max = stationary_direct(p)?.max();
                CheckResult::measured(
                    check,
                    target,
                    (max - bound).max(0.0),
                    DEGREE_BOUND_TOL,
                    format!("max weight {max:e}, bound {bound:e}"),
                )
            }
            Err(Error::NotSrwForm(why)) => {
                CheckResult::skipped(check, target, DEGREE_BOUND_TOL, format!("not a lazy simple random walk: {why}"))
            }
            Err(e) => return Err(e),
        },
        CheckName::Reversible => {
            CheckResult::skipped(check, target, REVERSIBLE_TOL, "needs a conductance matrix; run on the built-in corpus")
        }
        CheckName::ClosedForm => {
            CheckResult::skipped(check, target, CLOSED_FORM_TOL, "applies to the built-in drift line family only")
        }
        CheckName::GamblersRuin => {
            CheckResult::skipped(check, target, GAMBLER_TOL, "applies to the built-in absorbing walks only")
        }
    })
}

/// Small members of every generator, with and without perturbations.
pub fn builtin_corpus() -> Result<Vec<(String, StochasticMatrix)>> {
    let mut out = Vec::new();
    for (n, delta) in [(3, 1.0 / 3.0), (20, 0.25), (60, 0.75)] {
        out.push((format!("drift_line n={n} delta={delta}"), drift_line(n, delta)?.matrix));
    }
    for perturb in [false, true] {
        out.push((format!("drift_cycle n=21 delta=0.75 perturbed={perturb}"), drift_cycle(21, 0.75, perturb)?.matrix));
    }
    out.push(("grid d=2 n=3 tau=0.1".into(), lazy_srw_grid(2, 3, 0.1)?.matrix));
    out.push(("directed_torus d=2 n=2".into(), directed_torus(2, 2)?.matrix));
    let torus = lazy_torus(2, 3, 0.1)?;
    out.push(("lazy_torus d=2 n=3 tau=0.1".into(), torus.matrix.clone()));
    for lambda in [10.0, 100.0] {
        let spec = PerturbationSpec::homophily(box_community(2, 1), lambda)?;
        out.push((format!("lazy_torus d=2 n=3 homophily lambda={lambda}"), spec.apply(&torus)?.matrix));
    }
    out.push(("conductance d=2 n=3".into(), conductance_grid(2, 3, &[1.0, 2.0, 3.0], Some(0.5))?.matrix));
    Ok(out)
}

fn builtin_closed_form() -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    let mut at = String::new();
    for delta in [0.25, 1.0 / 3.0, 0.6, 0.75] {
        for n in [2, 3, 10, 50, 200] {
            let pi = stationary_direct(&drift_line(n, delta)?.matrix)?;
            let exact = drift_line_closed_form(n, delta);
            let dev = pi.as_slice().iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if dev >= worst {
                worst = dev;
                at = format!("worst at delta={delta} n={n}");
            }
        }
    }
    Ok(CheckResult::measured(CheckName::ClosedForm, "drift_line", worst, CLOSED_FORM_TOL, at))
}

fn builtin_reversible() -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    for (d, n) in [(1, 10), (2, 4), (3, 2)] {
        let (c, _) = grid_conductance(d, n, &[1.0, 2.5, 0.5, 4.0], Some(1.0))?;
        let closed = reversible_stationary(&c)?;
        let direct = stationary_direct(&crate::conductance::from_conductance(&c)?)?;
        let dev = closed
            .as_slice()
            .iter()
            .zip(direct.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    Ok(CheckResult::measured(
        CheckName::Reversible,
        "conductance grids",
        worst,
        REVERSIBLE_TOL,
        "closed form against direct solve".into(),
    ))
}

fn builtin_gamblers_ruin() -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    for n in [2u32, 5, 10, 30] {
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let chain = gamblers_ruin_chain(n as usize, p)?;
            for k in 1..n {
                let solved = expected_hitting(&chain, &[0, n as usize], k as usize)?;
                let closed = gamblers_ruin_expected(n, p, k)?;
                worst = worst.max((solved - closed).abs() / closed.max(1.0));
            }
        }
    }
    Ok(CheckResult::measured(
        CheckName::GamblersRuin,
        "absorbing walks",
        worst,
        GAMBLER_TOL,
        "closed form against absorbing-chain solve (relative)".into(),
    ))
}

/// Runs the requested checks over the built-in corpus.
pub fn run_builtin(checks: &[CheckName]) -> Result<VerifyReport> {
    let corpus = builtin_corpus()?;
    let mut results = Vec::new();
    for &check in checks {
        match check {
            CheckName::Kac | CheckName::DegreeBound => {
                for (name, p) in &corpus {
                    results.push(check_matrix(check, name, p, KAC_TOL)?);
                }
            }
            CheckName::ClosedForm => results.push(builtin_closed_form()?),
            CheckName::Reversible => results.push(builtin_reversible()?),
            CheckName::GamblersRuin => results.push(builtin_gamblers_ruin()?),
        }
    }
    Ok(VerifyReport::new(results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_suite_passes() {
        let report = run_builtin(&CheckName::ALL).unwrap();
        for r in &report.results {
            assert_ne!(r.status, Status::Fail, "{r:?}");
        }
        assert!(report.pass);
        // the drift chains are not simple random walks
        assert!(report
            .results
            .iter()
            .any(|r| r.check == CheckName::DegreeBound && r.status == Status::Skipped));
    }

    #[test]
    fn degree_bound_skips_non_srw() {
        let p = drift_line(5, 0.3).unwrap().matrix;
        let r = check_matrix(CheckName::DegreeBound, "m", &p, KAC_TOL).unwrap();
        assert_eq!(r.status, Status::Skipped);
        assert!(r.detail.contains("not a lazy simple random walk"));
    }

    #[test]
    fn closed_form_small_case() {
        let pi = drift_line_closed_form(3, 1.0 / 3.0);
        for (a, b) in pi.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(drift_line_closed_form(4, 0.5), vec![0.25; 4]);
    }

    #[test]
    fn check_names_parse() {
        for c in CheckName::ALL {
            assert_eq!(c.as_str().parse::<CheckName>().unwrap(), c);
        }
        assert!("nope".parse::<CheckName>().is_err());
    }
}
