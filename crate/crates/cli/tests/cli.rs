use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(name)
}

fn slotplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slotplan")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = slotplan(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    ok(&["generate", "--services", "10", "--operators", "2", "--seed", "5", "--out", s(&inst)]);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        ok(&["solve", "--instance", s(&inst), "--algo", "gwo", "--epochs", "15", "--pop", "8", "--seed", "9", "--out", s(out)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let trace: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(trace["evaluations"], 120);
    assert_eq!(trace["best_per_epoch"].as_array().unwrap().len(), 15);
}

#[test]
fn oracle_on_the_worked_example() {
    let out = ok(&["oracle", "--instance", s(&asset("madrid-barcelona.json"))]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    // Of the eight subsets only {}, {1}, {2}, {3} and {1,2} are conflict-free.
    assert_eq!(r["scheduled"], serde_json::json!([true, true, false]));
    assert_eq!(r["total"], 180.0);
}

#[test]
fn evaluate_shifted_proposal() {
    let out = ok(&[
        "evaluate",
        "--instance",
        s(&asset("madrid-barcelona.json")),
        "--proposal",
        s(&asset("table4-odt.json")),
        "--omega",
        "5",
    ]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["scheduled"], serde_json::json!([true, true, true]));
}

#[test]
fn marey_and_convergence_charts() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("m.svg");
    ok(&["plot", "marey", "--instance", s(&asset("madrid-barcelona.json")), "--out", s(&svg)]);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches(r#"class="service""#).count(), 3);
    assert!(text.contains(r#"class="conflict""#));

    let trace = dir.path().join("t.json");
    ok(&["solve", "--instance", s(&asset("madrid-barcelona.json")), "--epochs", "5", "--pop", "4", "--out", s(&trace)]);
    ok(&["plot", "marey", "--instance", s(&asset("madrid-barcelona.json")), "--result", s(&trace), "--out", s(&svg)]);
    let conv = dir.path().join("c.svg");
    ok(&["plot", "convergence", "--traces", s(&trace), s(&trace), "--out", s(&conv)]);
    assert_eq!(std::fs::read_to_string(&conv).unwrap().matches(r#"class="trace""#).count(), 2);
}

#[test]
fn bench_and_sensitivity_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    ok(&["generate", "--services", "6", "--operators", "2", "--seed", "1", "--out", s(&inst)]);
    let toml = dir.path().join("cfg.toml");
    std::fs::write(&toml, "epochs = 4\npopulation = 6\n[algorithms.SA]\nepochs = 24\npopulation = 1\n").unwrap();
    let csv = dir.path().join("r.csv");
    let summary = dir.path().join("s.json");
    ok(&[
        "bench", "--instance", s(&inst), "--algos", "ga,sa,acor", "--runs", "2", "--config", s(&toml), "--out", s(&csv),
        "--summary", s(&summary),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("rank,algorithm,run,revenue,time_s,scheduled_trains,delta_dt_min,delta_tt_min\n"));
    assert_eq!(text.lines().count(), 7);
    let sum: Value = serde_json::from_slice(&std::fs::read(&summary).unwrap()).unwrap();
    assert_eq!(sum["comparisons"].as_array().unwrap().len(), 3);

    let spec = dir.path().join("grid.json");
    std::fs::write(
        &spec,
        r#"{"instance": {"n_services": 5, "n_operators": 2}, "omega": [2.5, 5], "delta": [10],
            "algorithms": ["PSO"], "runs": 1, "epochs": 3, "population": 4}"#,
    )
    .unwrap();
    let out = ok(&["sensitivity", "--spec", s(&spec)]);
    let grid = String::from_utf8(out.stdout).unwrap();
    assert_eq!(grid.lines().next(), Some("omega,delta,mean_revenue"));
    assert_eq!(grid.lines().count(), 3);
}

#[test]
fn exit_codes() {
    assert_eq!(slotplan(&["--help"]).status.code(), Some(0));
    assert_eq!(slotplan(&["solve"]).status.code(), Some(1));
    assert_eq!(slotplan(&["frobnicate"]).status.code(), Some(1));
    let inst = asset("madrid-barcelona.json");
    assert_eq!(
        slotplan(&["solve", "--instance", s(&inst), "--config", "a.toml", "--preset", "defaults"]).status.code(),
        Some(1)
    );
    assert_eq!(slotplan(&["solve", "--instance", s(&inst), "--algo", "nope"]).status.code(), Some(1));
    assert_eq!(slotplan(&["solve", "--instance", "/nonexistent.json"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"corridor\": {\"stations\": []},\n  \"operators\": 3\n}").unwrap();
    let out = slotplan(&["evaluate", "--instance", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(slotplan(&["solve", "--instance", s(&inst), "--algo", "abc"]).status.code(), Some(3));
    let big = dir.path().join("big.json");
    ok(&["generate", "--services", "25", "--seed", "2", "--out", s(&big)]);
    assert_eq!(slotplan(&["oracle", "--instance", s(&big)]).status.code(), Some(3));
}
