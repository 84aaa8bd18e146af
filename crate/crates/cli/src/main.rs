use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use conlab::family::GraphFamily;
use conlab::hitting::{hitting_residual, kac_check, HittingSolver};
use conlab::scan::{democracy_scan, ScanSummary, ScanTable};
use conlab::sim::{estimate_stationary_occupation, simulate_return_time};
use conlab::stationary::solve;
use conlab::verify::{check_matrix, run_builtin, CheckName, CheckResult, Status, VerifyReport, KAC_TOL};
use conlab::{smat, Error, FamilyFile, FamilyKind, Label, LabeledMatrix, Method, PerturbationSpec};

/// Consensus weights, perturbations and hitting times of stochastic matrices.
#[derive(Parser)]
#[command(name = "conlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one family member as an SMAT file.
    Generate {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the node labels, in state order, as JSON.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Apply a PERT file to an SMAT matrix or to a family member.
    Perturb {
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve for the stationary distribution.
    Stationary {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value = "direct")]
        method: Method,
    },
    /// Solve a family over a range of sizes.
    Scan {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        perturb: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Inclusive size range `a:b`, or a single size.
        #[arg(long)]
        n: String,
        /// Node label to report, e.g. `0,0`; repeatable.
        #[arg(long)]
        track: Vec<Label>,
        #[arg(long, default_value = "direct")]
        method: Method,
        /// CSV output (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Expected hitting time of a target set, or return time of a state.
    Hitting {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required_unless_present = "return_to")]
        target: Vec<usize>,
        /// A state index or `all`.
        #[arg(long, default_value = "all")]
        start: String,
        #[arg(long = "return", conflicts_with_all = ["target"])]
        return_to: Option<usize>,
    },
    /// Monte Carlo return times or occupation frequencies.
    Simulate {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, required_unless_present = "occupation")]
        node: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long)]
        occupation: bool,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 1_000)]
        burn_in: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run named identity checks (`all` for every check).
    Verify {
        #[arg(required = true)]
        checks: Vec<String>,
        /// Check this matrix instead of the built-in corpus.
        #[arg(short, long)]
        input: Option<PathBuf>,
        /// States for the Kac check: `all` or a comma list.
        #[arg(long, default_value = "all")]
        nodes: String,
        #[arg(long, default_value_t = KAC_TOL)]
        tol: f64,
    },
}

#[derive(Args)]
struct FamilyArgs {
    /// grid, directed_torus, lazy_torus, drift_line, drift_cycle, conductance
    #[arg(long)]
    family: Option<String>,
    /// FAM file instead of --family.
    #[arg(long, conflicts_with = "family")]
    fam: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    perturb_zero: bool,
    /// Conductance values, comma separated.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long)]
    self_conductance: Option<f64>,
}

enum CliError {
    Usage(String),
    Core(Error),
    /// The computation ran but a check did not hold.
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl FamilyArgs {
    fn is_given(&self) -> bool {
        self.family.is_some() || self.fam.is_some()
    }

    fn kind(&self) -> CliResult<FamilyKind> {
        if let Some(path) = &self.fam {
            return Ok(FamilyFile::read(path)?.family);
        }
        let name = self.family.as_deref().ok_or_else(|| usage("--family or --fam is required"))?;
        let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("--family {name} needs --{flag}")));
        let dim = || self.dim.ok_or_else(|| usage(format!("--family {name} needs --dim")));
        Ok(match name {
            "grid" => FamilyKind::Grid {
                dim: dim()?,
                tau: need(self.tau, "tau")?,
            },
            "directed_torus" => FamilyKind::DirectedTorus { dim: dim()? },
            "lazy_torus" => FamilyKind::LazyTorus {
                dim: dim()?,
                tau: need(self.tau, "tau")?,
            },
            "drift_line" => FamilyKind::DriftLine {
                delta: need(self.delta, "delta")?,
            },
            "drift_cycle" => FamilyKind::DriftCycle {
                delta: need(self.delta, "delta")?,
                perturb_zero: self.perturb_zero,
            },
            "conductance" => {
                if self.values.is_empty() {
                    return Err(usage("--family conductance needs --values"));
                }
                FamilyKind::Conductance {
                    dim: dim()?,
                    values: self.values.clone(),
                    self_conductance: self.self_conductance,
                }
            }
            other => return Err(usage(format!("unknown family {other:?}"))),
        })
    }
}

fn parse_range(s: &str) -> CliResult<Vec<usize>> {
    let bad = || usage(format!("--n expects `a:b` or a single size, got {s:?}"));
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Core(e.into())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Core(e.into())),
    }
}

fn print_json(v: &serde_json::Value) -> CliResult {
    emit(None, &(serde_json::to_string_pretty(v).expect("json value serialises") + "\n"))
}

fn load_spec(path: &Path, lambda: Option<f64>) -> CliResult<PerturbationSpec> {
    let spec = PerturbationSpec::read(path)?;
    Ok(match lambda {
        Some(l) => spec.with_lambda(l)?,
        None => spec,
    })
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Generate {
            family,
            n,
            output,
            labels,
        } => {
            let member = family.kind()?.member(n)?;
            emit(output.as_deref(), &smat::to_string(&member.matrix))?;
            if let Some(path) = labels {
                let text = serde_json::to_string(&member.labels).expect("labels serialise") + "\n";
                emit(Some(&path), &text)?;
            }
            Ok(())
        }
        Command::Perturb {
            input,
            family,
            n,
            spec,
            lambda,
            output,
        } => {
            let spec = load_spec(&spec, lambda)?;
            let target = match (input, family.is_given()) {
                (Some(path), false) => LabeledMatrix::indexed(smat::read(&path)?),
                (None, true) => {
                    let n = n.ok_or_else(|| usage("perturbing a family member needs --n"))?;
                    family.kind()?.member(n)?
                }
                _ => return Err(usage("give exactly one of --input or a family")),
            };
            let out = spec.apply(&target)?;
            emit(output.as_deref(), &smat::to_string(&out.matrix))?;
            if output.is_some() {
                print_json(&json!({
                    "dim": out.matrix.dim(),
                    "community": out.community,
                    "irreducible": out.irreducible,
                }))?;
            }
            Ok(())
        }
        Command::Stationary { input, method } => {
            let p = smat::read(&input)?;
            let sol = solve(&p, method)?;
            print_json(&json!({
                "pi": sol.pi.as_slice(),
                "max_weight": sol.pi.max(),
                "argmax": sol.pi.argmax(),
                "method": sol.method,
                "residual": sol.residual,
                "iterations": sol.iterations,
            }))
        }
        Command::Scan {
            family,
            perturb,
            lambda,
            n,
            track,
            method,
            output,
            json: json_path,
        } => {
            let kind = family.kind()?;
            let sizes = parse_range(&n)?;
            let spec = match &perturb {
                Some(path) => Some(load_spec(path, lambda)?),
                None if lambda.is_some() => return Err(usage("--lambda needs --perturb")),
                None => None,
            };
            let records = democracy_scan(&kind, spec.as_ref(), &sizes, &track, method)?;
            let table = ScanTable::from_records(&track, &records)?;
            emit(output.as_deref(), &table.to_csv()?)?;
            if let Some(path) = json_path {
                let summary = ScanSummary {
                    family: serde_json::to_value(&kind).expect("family serialises"),
                    perturbation: spec,
                    solver: method,
                    records,
                };
                emit(Some(&path), &summary.to_json())?;
            }
            Ok(())
        }
        Command::Hitting {
            input,
            target,
            start,
            return_to,
        } => {
            let p = smat::read(&input)?;
            let solver = HittingSolver::new(&p);
            if let Some(i) = return_to {
                let ret = conlab::hitting::expected_return(&p, i)?;
                let h = solver.times_to(&[i])?;
                return print_json(&json!({
                    "query": {"return_to": i},
                    "value": ret,
                    "residual": hitting_residual(&p, &[i], &h),
                    "method": "state_reduction",
                }));
            }
            let h = solver.times_to(&target)?;
            let residual = hitting_residual(&p, &target, &h);
            let value = if start == "all" {
                json!(h.iter().copied().map(finite_or_null).collect::<Vec<_>>())
            } else {
                let s: usize = start
                    .parse()
                    .map_err(|_| usage(format!("--start expects a state index or `all`, got {start:?}")))?;
                let v = *h.get(s).ok_or(Error::IndexOutOfRange {
                    row: s,
                    col: s,
                    dim: p.dim(),
                })?;
                if v.is_infinite() {
                    return Err(Error::InfiniteHittingTime {
                        start: s,
                        reason: "the chain can avoid the target set forever".into(),
                    }
                    .into());
                }
                json!(v)
            };
            print_json(&json!({
                "query": {"target": target, "start": start},
                "value": value,
                "residual": residual,
                "method": "state_reduction",
            }))
        }
        Command::Simulate {
            input,
            node,
            samples,
            occupation,
            steps,
            burn_in,
            seed,
        } => {
            let p = smat::read(&input)?;
            let seed = seed.unwrap_or_else(|| {
                let s = rand::random::<u64>();
                eprintln!("seed: {s}");
                s
            });
            if occupation {
                let freq = estimate_stationary_occupation(&p, steps, burn_in, seed)?;
                print_json(&json!({
                    "frequencies": freq.as_slice(),
                    "steps": steps,
                    "burn_in": burn_in,
                    "seed": seed,
                }))
            } else {
                let node = node.ok_or_else(|| usage("--node is required"))?;
                let r = simulate_return_time(&p, node, samples, seed)?;
                print_json(&serde_json::to_value(r).expect("result serialises"))
            }
        }
        Command::Verify {
            checks,
            input,
            nodes,
            tol,
        } => {
            let mut names = Vec::new();
            for c in &checks {
                if c == "all" {
                    names.extend(CheckName::ALL);
                } else {
                    names.push(c.parse::<CheckName>().map_err(|e| usage(e.to_string()))?);
                }
            }
            let report = match input {
                None => run_builtin(&names)?,
                Some(path) => {
                    let p = smat::read(&path)?;
                    let target = path.display().to_string();
                    let nodes: Option<Vec<usize>> = if nodes == "all" {
                        None
                    } else {
                        Some(
                            nodes
                                .split(',')
                                .map(|t| t.trim().parse())
                                .collect::<Result<_, _>>()
                                .map_err(|_| usage(format!("--nodes expects `all` or a comma list, got {nodes:?}")))?,
                        )
                    };
                    let mut results = Vec::new();
                    for name in names {
                        results.push(match (&nodes, name) {
                            (Some(list), CheckName::Kac) => {
                                let r = kac_check(&p, list, tol)?;
                                CheckResult {
                                    check: name,
                                    target: target.clone(),
                                    status: if r.pass { Status::Pass } else { Status::Fail },
                                    deviation: Some(r.max_deviation),
                                    threshold: tol,
                                    detail: format!("{} nodes", list.len()),
                                }
                            }
                            _ => check_matrix(name, &target, &p, tol)?,
                        });
                    }
                    VerifyReport::new(results)
                }
            };
            print_json(&serde_json::to_value(&report).expect("report serialises"))?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::Failed("one or more checks failed".into()))
            }
        }
    }
}

fn configure_threads() -> CliResult {
    if let Ok(v) = std::env::var("CONLAB_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("CONLAB_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) if e.is_input_error() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(1)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("{}", json!({"error": "check_failed", "message": msg}));
            ExitCode::from(1)
        }
    }
}
