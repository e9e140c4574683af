//! Config, sweep, and emission behaviour.

use agesim_cli::config::{parse_config, ConfigError};
use agesim_cli::report;
use agesim_cli::sweep::{run_sweep, SweepTable};
use agesim_cli::{preset_fig4, preset_fig5};

const MINIMAL: &str = r#"
[graph]
nodes = 2
links = [{ from = 0, to = 1, buffer = "inf", dist = "exp 1" }]

[arrivals]
process = "erlang2"
rate = 1.0

[run]
horizon = 100.0
policies = ["fcfs"]
"#;

#[test]
fn minimal_config_resolves_documented_defaults() {
    let (_, plan) = parse_config(MINIMAL).expect("minimal config is valid");
    assert_eq!(plan.replications, 1);
    assert_eq!(plan.seed, 1);
    assert_eq!(plan.buffers, vec![None]);
    assert!(plan.lambda_grid.is_empty());
    assert_eq!(plan.out_dir, "out");
    assert_eq!(plan.formats, vec!["csv".to_string(), "plot".to_string()]);
    assert_eq!(plan.ordering_grid, 64);
    assert!(!plan.dominance);
}

#[test]
fn missing_horizon_is_reported_by_field_path() {
    let text = MINIMAL.replace("horizon = 100.0\n", "");
    let err = parse_config(&text).unwrap_err();
    match err {
        ConfigError::Validation { field, .. } => assert_eq!(field, "run.horizon"),
        other => panic!("expected validation error, got {other}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = MINIMAL.replace("[run]", "[run]\nfrobnicate = 3");
    let err = parse_config(&text).unwrap_err();
    match err {
        ConfigError::UnknownKey { key } => assert_eq!(key, "frobnicate"),
        other => panic!("expected unknown-key error, got {other}"),
    }
}

#[test]
fn parse_errors_carry_a_line() {
    let err = parse_config("[graph\nnodes = 2").unwrap_err();
    match err {
        ConfigError::Parse { line, .. } => assert_eq!(line, Some(1)),
        other => panic!("expected parse error, got {other}"),
    }
}

#[test]
fn bad_field_values_name_the_field() {
    let text = MINIMAL.replace("exp 1", "weibull 1 2");
    match parse_config(&text).unwrap_err() {
        ConfigError::Validation { field, .. } => {
            assert_eq!(field, "graph.links[0].dist")
        }
        other => panic!("unexpected {other}"),
    }
    let text = MINIMAL.replace("rate = 1.0", "rate = -2.0");
    match parse_config(&text).unwrap_err() {
        ConfigError::Validation { field, .. } => assert_eq!(field, "arrivals.rate"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn explicit_arrivals_validate_packet_invariants() {
    let text = r#"
[graph]
nodes = 2
links = [{ from = 0, to = 1, buffer = 1, dist = "const 1" }]

[arrivals]
process = "explicit"
explicit = [{ s = 0.0, a0 = 1.0 }, { s = 2.0, a0 = 1.0 }]

[run]
horizon = 10.0
policies = ["np-lgfs"]
"#;
    match parse_config(text).unwrap_err() {
        ConfigError::Validation { field, .. } => assert_eq!(field, "arrivals.explicit"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn config_round_trips_for_presets_and_minimal() {
    for cfg in [
        preset_fig4(),
        preset_fig5(),
        parse_config(MINIMAL).unwrap().0,
    ] {
        let text = cfg.to_toml();
        let (back, _) = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn sweep_emits_one_row_per_node_and_metric() {
    let (_, plan) = parse_config(MINIMAL).unwrap();
    let table = run_sweep(&plan, &[0.8]).unwrap();
    // 2 nodes x 2 metrics x 1 policy x 1 lambda.
    assert_eq!(table.rows.len(), 4);
    for row in &table.rows {
        assert_eq!(row.lambda, 0.8);
        assert_eq!(row.policy, "fcfs");
        assert!(row.ci_low <= row.mean && row.mean <= row.ci_high);
        assert_eq!(row.reps, 1);
    }
}

#[test]
fn sweep_is_deterministic_for_a_master_seed() {
    let (_, mut plan) = parse_config(MINIMAL).unwrap();
    plan.replications = 4;
    plan.seed = 99;
    let a = run_sweep(&plan, &[0.5, 1.0]).unwrap();
    let b = run_sweep(&plan, &[0.5, 1.0]).unwrap();
    assert_eq!(a, b);
    assert_eq!(report::sweep_csv(&a), report::sweep_csv(&b));
    plan.seed = 100;
    let c = run_sweep(&plan, &[0.5, 1.0]).unwrap();
    assert_ne!(report::sweep_csv(&a), report::sweep_csv(&c));
}

#[test]
fn empty_table_is_header_only() {
    assert_eq!(
        report::sweep_csv(&SweepTable::default()),
        "lambda,policy,node,metric,mean,ci_low,ci_high,reps\n"
    );
}

#[test]
fn ci_width_shrinks_like_inverse_sqrt_reps() {
    let (_, mut plan) = parse_config(MINIMAL).unwrap();
    plan.seed = 7;
    plan.replications = 60;
    let narrow_width = {
        let t = run_sweep(&plan, &[1.0]).unwrap();
        let r = t.row(1.0, "fcfs", 1, "avg-age").unwrap();
        r.ci_high - r.ci_low
    };
    plan.replications = 15;
    let wide_width = {
        let t = run_sweep(&plan, &[1.0]).unwrap();
        let r = t.row(1.0, "fcfs", 1, "avg-age").unwrap();
        r.ci_high - r.ci_low
    };
    // Quadrupling replications should halve the width, within 20%.
    let ratio = wide_width / narrow_width;
    assert!(
        (1.6..=2.4).contains(&ratio),
        "width ratio {ratio} (wide {wide_width}, narrow {narrow_width})"
    );
}

#[test]
fn manifest_records_the_master_seed() {
    let (file, plan) = parse_config(MINIMAL).unwrap();
    let m = report::manifest(&file.to_toml(), plan.seed, &[]);
    assert!(m.contains("master_seed = 1"));
}
