use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ptflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptflab"))
        .args(args)
        .env_remove("PTFLAB_SEED")
        .output()
        .expect("run ptflab")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const MAJ3: &str = r#"{"n": 3, "terms": [{"vars": [0], "coeff": 1}, {"vars": [1], "coeff": 1}, {"vars": [2], "coeff": 1}]}"#;

#[test]
fn analyze_majority() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "maj.json", MAJ3);
    let out = ptflab(&["analyze", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["average_sensitivity"]["method"], "enumeration");
    assert!((v["average_sensitivity"]["value"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((v["gl_bound"]["value"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((v["gl_bound"]["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn analyze_constant() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.json", r#"{"n": 4, "terms": [{"vars": [], "coeff": 2.5}]}"#);
    let out = ptflab(&["analyze", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["average_sensitivity"]["value"].as_f64(), Some(0.0));
    assert_eq!(v["alpha"]["value"].as_f64(), Some(0.0));
}

#[test]
fn analyze_csv_is_labeled() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "maj.json", MAJ3);
    let out = ptflab(&["analyze", "--input", &input, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("field,value,method,std_error,samples,seed\n"));
    assert!(text.contains("average_sensitivity,1.5,enumeration,,,"));
}

#[test]
fn large_n_without_samples_is_infeasible() {
    let out = ptflab(&["analyze", "--n", "30", "--d", "2", "--seed", "1", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn large_n_is_estimated_with_provenance() {
    let out = ptflab(&["analyze", "--n", "30", "--d", "2", "--seed", "1", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let avg = &v["average_sensitivity"];
    assert_eq!(avg["method"], "monte_carlo");
    assert_eq!(avg["samples"].as_u64(), Some(2000));
    assert_eq!(avg["seed"].as_u64(), Some(1));
    assert!(avg["std_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.json", r#"{"n": 2, "terms": [{"vars": [5], "coeff": 1}]}"#);
    assert_eq!(ptflab(&["analyze", "--input", &input]).status.code(), Some(2));
    let garbage = write(dir.path(), "garbage.json", "not json");
    assert_eq!(ptflab(&["analyze", "--input", &garbage]).status.code(), Some(2));
    assert_eq!(ptflab(&["analyze", "--input", "/nonexistent/p.json"]).status.code(), Some(2));
}

#[test]
fn random_is_deterministic_per_seed() {
    let args = ["random", "--n", "8", "--d", "2", "--terms", "10", "--seed", "5"];
    let (a, b) = (ptflab(&args), ptflab(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stderr).trim(), "seed: 5");
    let v = json(&a);
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 10);
    let mut subsets: Vec<String> = terms.iter().map(|t| t["vars"].to_string()).collect();
    subsets.sort();
    subsets.dedup();
    assert_eq!(subsets.len(), 10);
}

#[test]
fn random_degree_zero_is_constant() {
    let v = json(&ptflab(&["random", "--n", "5", "--d", "0", "--seed", "2"]));
    for t in v["terms"].as_array().unwrap() {
        assert!(t["vars"].as_array().unwrap().is_empty());
    }
}

#[test]
fn random_prints_entropy_seed() {
    let out = ptflab(&["random", "--n", "4", "--d", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let seed: u64 = stderr.trim().strip_prefix("seed: ").unwrap().parse().unwrap();
    let replay = ptflab(&["random", "--n", "4", "--d", "1", "--seed", &seed.to_string()]);
    assert_eq!(out.stdout, replay.stdout);
}

#[test]
fn unsatisfiable_sparsity_is_infeasible() {
    assert_eq!(ptflab(&["random", "--n", "3", "--d", "1", "--terms", "5", "--seed", "1"]).status.code(), Some(3));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(ptflab(&["suite", "--suite", "nope", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(ptflab(&["suite", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn gl_suite_rows() {
    let out = ptflab(&["suite", "--suite", "gl", "--seed", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let equality: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[1] == "witness_equality_d1").collect();
    let ns: Vec<&str> = equality.iter().map(|r| &r[2]).collect();
    assert_eq!(ns, ["n=3", "n=5", "n=7", "n=9", "n=11", "n=13", "n=15"]);
    assert!(equality.iter().all(|r| &r[3] == "hard" && &r[4] == "true"));
}

#[test]
fn suite_writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bundle.json");
    let out = ptflab(&["suite", "--suite", "gl", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["suite"], "gl");
    assert_eq!(v["summary"]["hard_failed"].as_u64(), Some(0));
}

#[test]
fn tree_and_trace_commands() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "maj.json", MAJ3);
    let tree = ptflab(&["tree", "--input", &input]);
    assert_eq!(tree.status.code(), Some(0));
    assert_eq!(json(&tree)["n"].as_u64(), Some(3));
    let csv_tree = ptflab(&["tree", "--input", &input, "--format", "csv"]);
    assert!(String::from_utf8_lossy(&csv_tree.stdout).starts_with("leaf,depth,class"));
    let trace = ptflab(&["trace", "--n", "8", "--d", "2", "--seed", "4", "--blocks", "2,2", "--samples", "500"]);
    assert_eq!(trace.status.code(), Some(0));
    assert_eq!(json(&trace)["levels"].as_array().unwrap().len(), 2);
}

#[test]
fn invalid_parameters_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "maj.json", MAJ3);
    assert_eq!(ptflab(&["tree", "--input", &input, "--eps", "0.5"]).status.code(), Some(2));
    assert_eq!(ptflab(&["analyze", "--input", &input, "--workers", "0"]).status.code(), Some(2));
    assert_eq!(ptflab(&["analyze", "--bogus"]).status.code(), Some(2));
}

#[test]
fn gl_command_csv() {
    let out = ptflab(&["gl", "--n", "5", "--d", "1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "n,d,as_exact,gl_bound,ratio,witness_flag\n5,1,1.875,1.875,1,true\n");
}
