use std::process::{Command, Output};

fn ryusplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ryusplit")).args(args).output().expect("spawn ryusplit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn plan_reports_positive_gamma_ryu() {
    let o = ryusplit(&["plan", "--l1", "1", "--l2", "1", "--lam", "1", "--alpha", "0.99", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let g = v["gamma_ryu"].as_f64().unwrap();
    assert!(g > 0.0 && g < v["gamma_upper"].as_f64().unwrap());
}

#[test]
fn plan_text_mentions_gamma() {
    let o = ryusplit(&["plan", "--l1", "2", "--l2", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("gamma"));
}

#[test]
fn bad_inputs_exit_2() {
    // alpha below the feasibility floor for lambda = 1
    let o = ryusplit(&["plan", "--l1", "1", "--l2", "1", "--alpha", "0.2"]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    let o = ryusplit(&["plan", "--l1", "-1", "--l2", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ryusplit(&["solve", "--algo", "admm"]);
    assert_eq!(o.status.code(), Some(2));
    // more observations than entries
    let o = ryusplit(&["solve", "--algo", "ryu+", "--n", "5", "--s", "26"]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    let o = ryusplit(&["bench", "--sizes", "10x20"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let o = ryusplit(&[
        "solve", "--algo", "ryu+", "--n", "20", "--s", "150", "--rank", "3", "--seed", "1",
        "--max-iter", "300", "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("gamma"));
    assert!(lines.count() >= 1);
    assert!(stdout(&o).contains("objective"));
}

#[test]
fn oversized_fixed_step_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let o = ryusplit(&[
        "solve", "--algo", "ryu", "--n", "10", "--s", "60", "--rank", "2", "--gamma", "1e6",
        "--max-iter", "200", "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("no descent guarantee"));
    assert!(stdout(&o).contains("NOT monotone"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 201);
}

#[test]
fn bench_flags_capped_rows_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = ryusplit(&[
        "bench", "--seeds", "2", "--sizes", "15:80", "--rank", "2", "--max-iter", "5", "--jobs", "1",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let table = stdout(&o);
    assert!(table.contains('*'), "{table}");
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    let traces = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(traces, 1 + 2 * 3);
}

#[test]
fn check_suite_passes() {
    let o = ryusplit(&["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
