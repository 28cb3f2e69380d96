use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn swarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, name: &str, n: usize, m: usize, seed: u64) -> PathBuf {
    let path = dir.join(name);
    let out = swarm(&[
        "generate",
        "--n",
        &n.to_string(),
        "--m",
        &m.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn run_into(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    swarm(&args)
}

#[test]
fn run_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let scenario = generate(dir.path(), "s.json", 4, 4, 1);
    let out = dir.path().join("out");
    let res = run_into(&scenario, &out, &["--plot", "--assignment-trace", "--h", "1.1"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "t,agent_id,px,py,vx,vy,ux,uy,goal_id,n_neighbors,n_banned"
    );
    assert!(trace.lines().count() > 4);

    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    let mut keys: Vec<&str> = metrics.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        ["h", "min_separation_m", "n_bans", "n_replans", "t_f_s", "total_energy_kJ_per_kg"]
    );
    assert_eq!(metrics["h"], 1.1);
    assert!(metrics["min_separation_m"].as_f64().unwrap() > 0.1);

    let svg = fs::read_to_string(out.join("trajectories.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("agent-1"));

    let jsonl = fs::read_to_string(out.join("assignment.jsonl")).unwrap();
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for k in ["iteration", "agent", "prescribed_goal", "banned", "deadline"] {
            assert!(v.get(k).is_some(), "missing {k} in {line}");
        }
    }
    assert!(jsonl.lines().count() >= 4);
}

#[test]
fn infinite_radius_is_reported_as_inf() {
    let dir = TempDir::new().unwrap();
    let scenario = generate(dir.path(), "s.json", 3, 3, 2);
    let res = run_into(&scenario, &dir.path().join("out"), &["--h", "inf"]);
    assert!(res.status.success());
    let metrics: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(metrics["h"], "inf");
}

#[test]
fn more_agents_than_goals_is_rejected() {
    let dir = TempDir::new().unwrap();
    let scenario = generate(dir.path(), "s.json", 4, 3, 0);
    let res = run_into(&scenario, &dir.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(2));
    let body: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(body["error"], "invalid_scenario");
    assert!(!body["violations"].as_array().unwrap().is_empty());
    assert!(!dir.path().join("out").join("trace.csv").exists());
}

#[test]
fn malformed_scenario_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{ \"agents\": [").unwrap();
    let res = run_into(&path, &dir.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(2));
    let body: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(body["error"], "parse");
}

#[test]
fn two_executions_write_identical_traces() {
    let dir = TempDir::new().unwrap();
    let scenario = generate(dir.path(), "s.json", 5, 5, 3);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_into(&scenario, &a, &["--h", "0.95"]).status.success());
    assert!(run_into(&scenario, &b, &["--h", "0.95"]).status.success());
    assert_eq!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
    assert_eq!(fs::read(a.join("metrics.json")).unwrap(), fs::read(b.join("metrics.json")).unwrap());
}

#[test]
fn sweep_writes_one_row_per_radius() {
    let dir = TempDir::new().unwrap();
    let scenario = generate(dir.path(), "s.json", 3, 3, 4);
    let out = dir.path().join("sweep");
    let res = swarm(&["sweep", scenario.to_str().unwrap(), "--h", "0.75,inf", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h_m,min_separation_cm,energy_kJ_per_kg,t_f_s,status");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.75,") && lines[1].ends_with(",ok"));
    assert!(lines[2].starts_with("inf,") && lines[2].ends_with(",ok"));
    assert_eq!(String::from_utf8(res.stdout).unwrap(), csv);
}

#[test]
fn oracle_check_prints_one_line_per_seed() {
    let res = swarm(&["oracle-check", "--n", "5", "--m", "6", "--seeds", "3"]);
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<serde_json::Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    for (seed, v) in lines.iter().enumerate() {
        assert_eq!(v["seed"], seed as u64);
        assert_eq!(v["equal"], true);
    }
}

#[test]
fn oversized_oracle_check_fails_cleanly() {
    let res = swarm(&["oracle-check", "--n", "12", "--m", "12"]);
    assert!(!res.status.success());
    let body: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert!(body["message"].is_string());
}
