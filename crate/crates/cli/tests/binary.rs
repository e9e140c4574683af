//! End-to-end checks of the `agesim` binary: exit codes and file output.

use std::process::Command;

fn agesim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_agesim"))
}

#[test]
fn preset_then_run_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig4.toml");
    let status = agesim()
        .args(["preset", "fig4", "--out"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());

    // Scale the preset down so the smoke run stays fast.
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("horizon = 10000.0", "horizon = 100.0")
        .replace("replications = 200", "replications = 2");
    std::fs::write(&cfg, text).unwrap();

    let out = dir.path().join("out");
    let status = agesim()
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("lambda,policy,node,metric,mean,ci_low,ci_high,reps\n"));
    assert!(csv.contains("prmp-lgfs[B=1]"));
    assert!(out.join("manifest.txt").exists());
    assert!(out.join("plot/node2_peak-age.dat").exists());
}

#[test]
fn identical_invocations_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mini.toml");
    std::fs::write(
        &cfg,
        r#"
[graph]
nodes = 2
links = [{ from = 0, to = 1, buffer = 1, dist = "exp 1" }]

[arrivals]
process = "erlang2"
rate = 1.0
delay = "two-point 1 100"

[run]
horizon = 150.0
replications = 4
seed = 77
policies = ["prmp-lgfs", "fcfs"]
"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = agesim()
            .args(["sweep"])
            .arg(&cfg)
            .args(["--lambda", "0.5:1.0:0.5", "--out-dir"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn validation_failures_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[graph]\nnodes = 2\nlinks = []\n\n[arrivals]\nprocess = \"erlang2\"\nrate = 1.0\n\n[run]\npolicies = [\"fcfs\"]\n",
    )
    .unwrap();
    // Missing horizon (and an unreachable node) -> validation failure.
    let status = agesim().arg("run").arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(1));

    let status = agesim()
        .args(["check-dist", "weibull", "1", "2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    let status = agesim()
        .args(["preset", "fig9", "--out"])
        .arg(dir.path().join("x.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn check_dist_reports_classification() {
    let out = agesim()
        .args(["check-dist", "exp", "1.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("new-better-than-used: true"));
    assert!(text.contains("new-worse-than-used: true"));
}

#[test]
fn couple_reports_dominance_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mini.toml");
    std::fs::write(
        &cfg,
        r#"
[graph]
nodes = 2
links = [{ from = 0, to = 1, buffer = "inf", dist = "exp 1" }]

[arrivals]
process = "erlang2"
rate = 1.0
delay = "two-point 1 100"

[run]
horizon = 100.0
replications = 5
seed = 3
policies = ["prmp-lgfs", "fcfs"]
"#,
    )
    .unwrap();
    let out = dir.path().join("c");
    let output = agesim()
        .arg("couple")
        .arg(&cfg)
        .args(["--pairs", "prmp-lgfs:fcfs", "--out-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let csv = std::fs::read_to_string(out.join("dominance.csv")).unwrap();
    assert!(csv.starts_with("seed,pair,holds,first_violation_t\n"));
    assert_eq!(csv.lines().count(), 6, "5 replications plus header");
    for line in csv.lines().skip(1) {
        assert!(line.contains("prmp-lgfs>fcfs,true"));
    }
}
