use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ipjdsvd::load_matrix_market;
use ipjdsvd::report::revalidate;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ipjdsvd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// Diagonal 8×6 matrix with singular values 1..6 plus a coupling entry.
fn write_matrix(dir: &Path) -> PathBuf {
    let path = dir.join("a.mtx");
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n% test matrix\n8 6 7\n");
    for i in 1..=6 {
        s.push_str(&format!("{i} {i} {}\n", i as f64));
    }
    s.push_str("7 2 0.5\n");
    std::fs::write(&path, s).unwrap();
    path
}

fn solve_args<'a>(matrix: &'a str, report: &'a str) -> Vec<&'a str> {
    vec!["--matrix", matrix, "--tau", "3.1", "--num", "2", "--report", report, "--no-timestamp"]
}

#[test]
fn reports_are_byte_identical_without_timestamps() {
    let dir = TempDir::new().unwrap();
    let m = write_matrix(dir.path());
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    let (ms, s1, s2) = (m.to_str().unwrap(), r1.to_str().unwrap(), r2.to_str().unwrap());
    let o1 = run(&solve_args(ms, s1));
    let o2 = run(&solve_args(ms, s2));
    assert_eq!(o1.status.code(), Some(0), "{}", String::from_utf8_lossy(&o1.stderr));
    assert_eq!(o2.status.code(), Some(0));
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());
    assert_eq!(o1.stdout, o2.stdout);
    let text = std::fs::read_to_string(&r1).unwrap();
    assert!(!text.contains("timestamp") && !text.contains("wall_time"));
}

#[test]
fn emitted_vectors_revalidate() {
    let dir = TempDir::new().unwrap();
    let m = write_matrix(dir.path());
    let r = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let mut args = solve_args(m.to_str().unwrap(), r.to_str().unwrap());
    args.extend(["--emit-vectors", "--csv", csv.to_str().unwrap()]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let a = load_matrix_market(&m).unwrap();
    let norme = a.norm_estimates().norme;
    let check = revalidate(&std::fs::read_to_string(&r).unwrap(), &a).unwrap();
    assert!(check.max_triplet_gap <= 1e-12 * norme, "{check:?}");
    assert!((check.stored - check.recomputed).abs() <= 1e-12 * norme);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 3);
    assert!(rows.starts_with("index,value,residual"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let m = write_matrix(dir.path());
    let ms = m.to_str().unwrap();

    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    // usage errors
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--matrix", ms, "--mode", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["--matrix", ms, "--audit", "thm2"]).status.code(), Some(1));
    let missing = run(&["--matrix", "/nonexistent/a.mtx"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    // more triplets than the matrix has
    assert_eq!(run(&["--matrix", ms, "--num", "7"]).status.code(), Some(1));
    // an outer-iteration cap too small to converge
    let partial = run(&["--matrix", ms, "--tau", "3.1", "--num", "2", "--maxit-outer", "1", "--tol", "1e-14"]);
    assert_eq!(partial.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&partial.stdout).contains("MaxOuter"));
}

#[test]
fn audit_runs_and_reports() {
    let dir = TempDir::new().unwrap();
    let r = dir.path().join("audit.json");
    let out = run(&["--audit", "thm3", "--trials", "5", "--seed", "3", "--report", r.to_str().unwrap(), "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert!(doc["audit"]["checks"].as_array().is_some_and(|c| !c.is_empty()));
    assert!(doc.get("run").is_none());
}
