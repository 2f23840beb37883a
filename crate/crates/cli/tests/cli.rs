use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dyninfer::format::{EvalDocument, OracleDocument, SimDocument, SolveDocument};
use tempfile::TempDir;

fn dyninfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyninfer"))
        .args(args)
        .env_remove("DYNINFER_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_example(dir: &Path, which: &str, n: usize) -> PathBuf {
    let path = dir.join(format!("{which}.json"));
    let out = dyninfer(&["example", which, "--n", &n.to_string(), "-o", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn solve_happy_path() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "section33", 6);
    let out = dyninfer(&["solve", "-m", model.to_str().unwrap(), "--tie-break", "myopic"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: SolveDocument = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc.v_star[0]["0"], 1.9);
    assert_eq!(doc.v_star[0]["1"], 2.1);
    assert_eq!(doc.policy[0]["1"], "0");
    assert_eq!(doc.ties[1]["1"], vec!["0", "1"]);
    assert_eq!(doc.min_loss, 1.9);

    let out = dyninfer(&["solve", "-m", model.to_str().unwrap(), "--init", "1"]);
    let doc: SolveDocument = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc.min_loss, 2.1);
}

#[test]
fn solve_output_round_trips_through_schema() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "stock", 6);
    let out = dyninfer(&["solve", "-m", model.to_str().unwrap()]);
    let text = stdout(&out);
    let doc: SolveDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(dyninfer::format::to_json(&doc), text);
}

#[test]
fn evaluate_default_and_given_strategy() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "stock", 6);
    let out = dyninfer(&["evaluate", "-m", model.to_str().unwrap()]);
    let doc: EvalDocument = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc.j, 2.1);

    let strategy = dir.path().join("myopic.json");
    let rows = vec![r#"{"0": "0", "1": "1"}"#; 6].join(",");
    std::fs::write(&strategy, format!(r#"{{"policy": [{rows}]}}"#)).unwrap();
    let out = dyninfer(&[
        "evaluate",
        "-m",
        model.to_str().unwrap(),
        "-s",
        strategy.to_str().unwrap(),
    ]);
    let doc: EvalDocument = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc.j, 2.4);
}

#[test]
fn simulate_reports_and_respects_seed() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "stock", 6);
    let m = model.to_str().unwrap();
    let a = dyninfer(&["simulate", "-m", m, "--seed", "42", "--rollouts", "5000"]);
    let b = dyninfer(&["simulate", "-m", m, "--seed", "42", "--rollouts", "5000"]);
    assert_eq!(a.stdout, b.stdout);
    let doc: SimDocument = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(doc.seed, 42);
    assert_eq!(doc.rollouts, 5000);
    assert!(doc.trajectories.is_empty());

    let env = Command::new(env!("CARGO_BIN_EXE_dyninfer"))
        .args(["simulate", "-m", m, "--rollouts", "5000"])
        .env("DYNINFER_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(env.stdout, a.stdout);

    let kept = dyninfer(&["simulate", "-m", m, "--rollouts", "10", "--keep-trajectories", "3"]);
    let doc: SimDocument = serde_json::from_str(&stdout(&kept)).unwrap();
    assert_eq!(doc.trajectories.len(), 3);
    assert_eq!(doc.trajectories[0].xs.len(), 6);
}

#[test]
fn verify_rejects_large_search_space() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "stock", 6);
    let out = dyninfer(&["verify", "-m", model.to_str().unwrap(), "--limit", "1000000"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"], "SearchSpaceTooLarge");
    // sum over rounds of 2^i * 2^(i-1) = 2730 histories, two estimates each.
    assert!(err["message"].as_str().unwrap().contains("2^2730"));
}

#[test]
fn verify_small_model_and_random_sweep() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "section33", 2);
    let out = dyninfer(&["verify", "-m", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    let doc: OracleDocument = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(doc.strategies_searched, Some(1024));
    assert!(lines.next().unwrap().starts_with("PASS gap_max="));

    let out = dyninfer(&[
        "verify", "--instances", "5", "--seed", "3", "--method", "auto", "--mode", "revealed",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().last().unwrap().starts_with("PASS"));
}

#[test]
fn export_trellis_dot() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "stock", 6);
    let out = dyninfer(&["export-trellis", "-m", model.to_str().unwrap(), "-f", "dot"]);
    assert_eq!(out.status.code(), Some(0));
    let dot = stdout(&out);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("[label=\"x=").count(), 12);
    assert_eq!(dot.matches("color=blue").count(), 3);

    let out = dyninfer(&["export-trellis", "-m", model.to_str().unwrap(), "-f", "text"]);
    assert!(stdout(&out).starts_with("round 1"));
}

#[test]
fn export_bar_loss_csv() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "section33", 2);
    let out = dyninfer(&["export", "bar-loss", "-m", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "round,x,yhat,value");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert_eq!(lines[2], "1,0,1,0.9");
}

#[test]
fn yield_example_is_solvable() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("yield.json");
    let out = dyninfer(&[
        "example", "yield", "--n", "4", "--beta", "1", "--dc", "10", "--planner", "fall-back",
        "-o", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = dyninfer(&["solve", "-m", path.to_str().unwrap()]);
    let doc: SolveDocument = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc.policy.len(), 4);
    assert_eq!(doc.policy[0]["0"], "not_yield");

    let out = dyninfer(&["example", "yield", "--dc", "99"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_input_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"n\": 2, \"x_space\": [").unwrap();
    let out = dyninfer(&["solve", "-m", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.contains("\"error\":\"Parse\""));

    let out = dyninfer(&["solve", "-m", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"error\":\"Io\""));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(dyninfer(&["solve"]).status.code(), Some(2));
    assert_eq!(dyninfer(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        dyninfer(&["solve", "-m", "x.json", "--tie-break", "random"]).status.code(),
        Some(2)
    );
}

#[test]
fn model_from_stdin() {
    let dir = TempDir::new().unwrap();
    let model = write_example(dir.path(), "section33", 3);
    let mut child = Command::new(env!("CARGO_BIN_EXE_dyninfer"))
        .args(["solve", "-m", "-"])
        .stdin(std::fs::File::open(&model).unwrap())
        .output()
        .unwrap();
    assert!(child.status.success());
    let doc: SolveDocument = serde_json::from_slice(&std::mem::take(&mut child.stdout)).unwrap();
    assert_eq!(doc.v_star.len(), 3);
}
