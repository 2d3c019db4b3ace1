use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use viewcsp::io::{serialize_instance, Instance};
use viewcsp::testkit::{b3c, example1, k2, oracle_enumerate, triangle, OracleBudget};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viewcsp")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, instance: &Instance) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serialize_instance(instance).unwrap()).unwrap();
    path
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn example(dir: &TempDir, output: &[&str]) -> PathBuf {
    let i = Instance { left: example1(), right: b3c(), output: output.iter().map(|x| x.to_string()).collect() };
    write(dir, "example.toml", &i)
}

fn arg(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn enumerate_matches_the_oracle() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["A", "B"]);
    let out = run(&["enumerate", "--method", "tw", "--k", "3", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let got: BTreeSet<String> = records(&out)
        .iter()
        .map(|r| {
            assert_eq!(r["event"], "projected_solution");
            r["solution"].to_string()
        })
        .collect();
    let expected: BTreeSet<String> = oracle_enumerate(&example1(), &b3c(), &["A", "B"], OracleBudget::default())
        .unwrap()
        .iter()
        .map(|h| serde_json::to_value(h).unwrap().to_string())
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn certified_failure_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let i = Instance { left: triangle(), right: k2(), output: vec!["A".into()] };
    let path = write(&dir, "odd.toml", &i);
    let out = run(&["enumerate-certified", "--method", "tw", "--k", "2", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(records(&out).last().unwrap(), &serde_json::json!({ "event": "dm_failure" }));
}

#[test]
fn certified_records_carry_certificates() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["A", "B"]);
    let out = run(&["enumerate-certified", "--method", "tw", "--k", "3", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 6);
    for r in recs {
        assert_eq!(r["event"], "certified_solution");
        assert_eq!(r["certificate"].as_object().unwrap().len(), 4);
    }
}

#[test]
fn check_tp_on_the_running_example() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &[]);
    let out = run(&["check-tp", "--method", "tw", "--k", "2", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "no tree projection");
    let out = run(&["check-tp", "--method", "tw", "--k", "3", "--input", arg(&path)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("tree_projection"));
}

#[test]
fn tp_covered_flags() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["A", "B", "C"]);
    let stdout = |args: &[&str]| String::from_utf8_lossy(&run(args).stdout).trim().to_string();
    assert_eq!(stdout(&["tp-covered", "--method", "tw", "--k", "3", "--input", arg(&path)]), "true");
    assert_eq!(stdout(&["tp-covered", "--through-dm", "--method", "tw", "--k", "3", "--input", arg(&path)]), "true");
    assert_eq!(stdout(&["tp-covered", "--method", "tw", "--k", "2", "--input", arg(&path)]), "false");
}

#[test]
fn cores_of_the_running_example() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &[]);
    let out = run(&["core", "--input", arg(&path)]);
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0]["universe"], serde_json::json!(["A", "B", "C"]));
    assert_eq!(recs[1]["universe"], serde_json::json!(["B", "C", "D"]));
}

#[test]
fn truncation_marker() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["A", "B", "C"]);
    let out = run(&["enumerate", "--k", "3", "--max-solutions", "2", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[2]["event"], "truncated");
}

#[test]
fn stats_go_to_stderr() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["A"]);
    let out = run(&["enumerate", "--k", "3", "--stats", "--input", arg(&path)]);
    let stats: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(stats["outputs"], 3);
    assert_eq!(stats["gac_calls_between_outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["D", "A", "E"]);
    let args = ["enumerate-certified", "--method", "hw", "--k", "2", "--input", arg(&path)];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn parse_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "output = []\nvocabulary = [{ name = \"R\", arity = 2 }]\n[left]\nuniverse = [\"A\"]\nrelations = { R = [[\"A\"]] }\n[right]\nuniverse = []\n",
    )
    .unwrap();
    let out = run(&["enumerate", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("left.relations"));
    assert_eq!(run(&["enumerate", "--input", "/nonexistent/file.toml"]).status.code(), Some(3));
    assert_eq!(run(&["enumerate", "--k", "zero"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["Z"]);
    let out = run(&["enumerate", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`Z`"));
}

#[test]
fn oracle_refuses_large_instances() {
    let dir = TempDir::new().unwrap();
    let gen = run(&["gen", "grid", "--rows", "4", "--cols", "4"]);
    assert_eq!(gen.status.code(), Some(0));
    let path = dir.path().join("grid.toml");
    std::fs::write(&path, &gen.stdout).unwrap();
    let out = run(&["oracle", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn generated_colouring_instances_run() {
    let dir = TempDir::new().unwrap();
    let gen = run(&["gen", "3col", "--edges", "a-b,b-c,c-d,d-a"]);
    assert_eq!(gen.status.code(), Some(0));
    let path = dir.path().join("cycle.toml");
    std::fs::write(&path, &gen.stdout).unwrap();
    let out = run(&["oracle", "--input", arg(&path)]);
    assert_eq!(records(&out), vec![serde_json::json!({ "event": "projected_solution", "solution": {} })]);
    let random = run(&["gen", "random", "--seed", "3"]);
    assert_eq!(random.stdout, run(&["gen", "random", "--seed", "3"]).stdout);
}

#[test]
fn view_and_gac_dumps() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["A"]);
    let views = records(&run(&["views", "--method", "hw", "--k", "1", "--input", arg(&path)]));
    // seven constraints and dom(A), each once as a base view and once as a subproblem
    assert_eq!(views.len(), 16);
    let gac = records(&run(&["gac", "--method", "tw", "--k", "2", "--input", arg(&path)]));
    assert_eq!(gac.last().unwrap()["any_empty"], false);
    assert!(gac[..gac.len() - 1].iter().all(|r| r["after"].as_u64() <= r["before"].as_u64()));
}

#[test]
fn bench_delay_reports_gaps() {
    let dir = TempDir::new().unwrap();
    let path = example(&dir, &["A", "B", "C"]);
    let out = run(&["bench-delay", "--method", "tw", "--k", "3", "--input", arg(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0];
    assert_eq!(r["outputs"], 6);
    assert_eq!(r["report"]["within_bound"], true);
}
