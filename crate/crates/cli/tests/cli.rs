use std::path::Path;
use std::process::{Command, Output};

fn kbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kbandit")).args(args).output().unwrap()
}

fn scenario_file(dir: &Path, name: &str, horizon: usize) -> String {
    let out = kbandit(&["scenarios", "show", name]);
    assert!(out.status.success());
    let mut cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    cfg["horizon"] = horizon.into();
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn scenarios_list_names_every_scenario() {
    let out = kbandit(&["scenarios", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "realizable",
        "misspec_sin",
        "misspec_sign",
        "spike",
        "contextual_master",
        "gpucb_failure",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
    assert_eq!(kbandit(&["scenarios", "show", "nope"]).status.code(), Some(2));
}

#[test]
fn run_writes_csv_and_summary_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_file(dir.path(), "realizable", 30);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = kbandit(&[
            "run",
            &cfg,
            "--seed",
            "7",
            "--replications",
            "2",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(summary["replications"], 2);
        assert_eq!(summary["base_seed"], 7);
    }
    let ca = std::fs::read(&a).unwrap();
    assert_eq!(ca, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ca).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "round,replication,algorithm,action_index,reward,inst_regret_star,cum_regret_star,cum_regret_tilde"
    );
    assert_eq!(text.lines().count(), 61);
    assert!(dir.path().join("a.summary.json").exists());
}

#[test]
fn gamma_and_coverage_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario_file(dir.path(), "realizable", 20);
    let out = kbandit(&["gamma", &cfg, "--t", "10"]);
    assert!(out.status.success());
    let g: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(g["upper_estimate"].as_f64().unwrap() > g["greedy"].as_f64().unwrap());
    assert!(g.get("exact").is_none());

    let out = kbandit(&["coverage", &cfg, "--runs", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let c: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(c["runs"], 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(kbandit(&["run", "/nonexistent/cfg.json"]).status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kernel": {"family": "linear"}}"#).unwrap();
    assert_eq!(kbandit(&["run", bad.to_str().unwrap()]).status.code(), Some(2));

    let cfg = scenario_file(dir.path(), "realizable", 10);
    assert_eq!(kbandit(&["run", &cfg, "--replications", "0"]).status.code(), Some(2));
    assert_eq!(kbandit(&["bogus"]).status.code(), Some(2));

    // Output path inside a regular file cannot be created: runtime error.
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out_path = blocker.join("trace.csv");
    let out = kbandit(&["run", &cfg, "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // Coverage on a misspecified objective is a config error.
    let sign = scenario_file(dir.path(), "misspec_sign", 5);
    assert_eq!(kbandit(&["coverage", &sign, "--runs", "2"]).status.code(), Some(2));
}
