use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use conlab::scan::ScanTable;
use serde_json::Value;
use tempfile::TempDir;

fn conlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conlab"))
        .args(args)
        .env("CONLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    fs::write(&p, text).unwrap();
    p
}

fn generate_drift_line(dir: &TempDir) -> String {
    let m = path(dir, "m.smat");
    let out = conlab(&["generate", "--family", "drift_line", "--delta", "0.3333333333333333", "--n", "3", "-o", &m]);
    assert!(out.status.success(), "{}", stderr(&out));
    m
}

const HOMOPHILY: &str = r#"{"format":"PERT","version":1,
"community":[[0,0],[1,0],[-1,0],[0,1],[0,-1],[1,1],[1,-1],[-1,1],[-1,-1]],
"kind":"homophily","lambda":1}"#;

#[test]
fn drift_line_stationary_weights() {
    let dir = TempDir::new().unwrap();
    let m = generate_drift_line(&dir);
    let out = conlab(&["stationary", "-i", &m, "--method", "direct"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let pi: Vec<f64> = v["pi"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (got, want) in pi.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
        assert!((got - want).abs() < 1e-12, "{pi:?}");
    }
    assert_eq!(v["argmax"], 0);
}

#[test]
fn power_method_agrees_with_direct() {
    let dir = TempDir::new().unwrap();
    let m = generate_drift_line(&dir);
    let get = |method: &str| {
        let out = conlab(&["stationary", "-i", &m, "--method", method]);
        assert!(out.status.success(), "{}", stderr(&out));
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        v["max_weight"].as_f64().unwrap()
    };
    assert!((get("direct") - get("power")).abs() < 1e-10);
}

#[test]
fn kac_on_a_generated_matrix_exits_zero() {
    let dir = TempDir::new().unwrap();
    let m = generate_drift_line(&dir);
    let out = conlab(&["verify", "kac", "-i", &m, "--nodes", "all", "--tol", "1e-8"]);
    assert!(out.status.success(), "{}{}", stdout(&out), stderr(&out));
}

#[test]
fn homophily_scan_loses_its_maximum() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "h.json", HOMOPHILY);
    let csv = path(&dir, "scan.csv");
    let out = conlab(&[
        "scan", "--family", "lazy_torus", "--dim", "2", "--tau", "0.1", "--perturb", &spec, "--lambda", "100",
        "--n", "2:25", "--track", "0,0", "-o", &csv,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = ScanTable::from_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    let rows = table.to_csv().unwrap();
    let maxima: Vec<f64> = rows
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(maxima.len(), 24);
    assert!(maxima.windows(2).all(|w| w[1] < w[0]), "{maxima:?}");
    assert!(maxima[23] < 0.04);
}

#[test]
fn scan_outputs_reread_to_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "scan.csv");
    let json = path(&dir, "scan.json");
    let out = conlab(&[
        "scan", "--family", "drift_line", "--delta", "0.3", "--n", "2:12", "--track", "1", "-o", &csv, "--json", &json,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv_text = fs::read_to_string(&csv).unwrap();
    assert_eq!(ScanTable::from_csv(&csv_text).unwrap().to_csv().unwrap(), csv_text);
    let json_text = fs::read_to_string(&json).unwrap();
    let summary = conlab::scan::ScanSummary::parse(&json_text).unwrap();
    assert_eq!(summary.to_json(), json_text);
}

#[test]
fn smat_output_is_stable() {
    let dir = TempDir::new().unwrap();
    let m = generate_drift_line(&dir);
    let text = fs::read_to_string(&m).unwrap();
    assert_eq!(conlab::smat::to_string(&conlab::smat::parse(&text).unwrap()), text);
}

#[test]
fn corrupted_smat_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.smat", "SMAT 1 2\n0 0 0.5\n0 1 0.4\n1 1 1.0\nEND\n");
    let out = conlab(&["stationary", "-i", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr(&out).trim().lines().count(), 1, "{}", stderr(&out));

    let truncated = write(&dir, "cut.smat", "SMAT 1 2\n0 0 1.0\n");
    assert_eq!(conlab(&["stationary", "-i", &truncated]).status.code(), Some(2));
}

#[test]
fn missing_file_and_unknown_flag_are_usage_errors() {
    assert_eq!(conlab(&["stationary", "-i", "/nonexistent/m.smat"]).status.code(), Some(2));
    assert_eq!(conlab(&["stationary", "--bogus"]).status.code(), Some(2));
    assert_eq!(conlab(&["generate", "--family", "no_such_family", "--n", "3"]).status.code(), Some(2));
}

#[test]
fn reducible_matrix_is_a_computation_error() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "red.smat", "SMAT 1 2\n0 0 1.0000000000000000e0\n1 1 1.0000000000000000e0\nEND\n");
    let out = conlab(&["stationary", "-i", &m]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(v["error"], "reducible");
    assert!(v["message"].is_string());
}

#[test]
fn hitting_and_return_times() {
    let dir = TempDir::new().unwrap();
    // fair gambler's ruin on {0,1,2,3,4}, absorbing ends
    let m = write(
        &dir,
        "ruin.smat",
        "SMAT 1 5\n0 0 1.0\n1 0 0.5\n1 2 0.5\n2 1 0.5\n2 3 0.5\n3 2 0.5\n3 4 0.5\n4 4 1.0\nEND\n",
    );
    let out = conlab(&["hitting", "-i", &m, "--target", "0,4", "--start", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-12);

    let line = generate_drift_line(&dir);
    let out = conlab(&["hitting", "-i", &line, "--return", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 7.0).abs() < 1e-10);
}

#[test]
fn simulation_prints_its_seed_and_replays() {
    let dir = TempDir::new().unwrap();
    let m = generate_drift_line(&dir);
    let first = conlab(&["simulate", "-i", &m, "--node", "0", "--samples", "2000"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let seed = stderr(&first)
        .lines()
        .find_map(|l| l.strip_prefix("seed: ").map(str::to_owned))
        .expect("seed reported");
    let again = conlab(&["simulate", "-i", &m, "--node", "0", "--samples", "2000", "--seed", &seed]);
    assert_eq!(stdout(&first), stdout(&again));
    let v: Value = serde_json::from_str(&stdout(&again)).unwrap();
    let est = v["estimate"].as_f64().unwrap();
    let se = v["standard_error"].as_f64().unwrap();
    assert!((est - 7.0 / 4.0).abs() <= 4.0 * se + 1e-12, "{est} ± {se}");
}

#[test]
fn degree_bound_skips_non_srw_input() {
    let dir = TempDir::new().unwrap();
    let m = generate_drift_line(&dir);
    let out = conlab(&["verify", "degree_bound", "-i", &m]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["results"][0]["status"], "skipped");
}

#[test]
fn builtin_corpus_verifies() {
    let out = conlab(&["verify", "all"]);
    assert!(out.status.success(), "{}{}", stdout(&out), stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn perturb_reports_the_community() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "h.json", HOMOPHILY);
    let o = path(&dir, "p.smat");
    let out = conlab(&[
        "perturb", "--family", "lazy_torus", "--dim", "2", "--tau", "0.1", "--n", "3", "--spec", &spec, "--lambda",
        "10", "-o", &o,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["dim"], 49);
    assert_eq!(v["community"].as_array().unwrap().len(), 9);
    assert_eq!(v["irreducible"], true);
    assert!(Path::new(&o).exists());
}
