//! End-to-end behavior of the `lps` binary: output files, exit codes, and
//! the dimension-based exploration dispatch.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lps")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

#[test]
fn fit_writes_the_full_output_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let output = run(&[
        "fit",
        "--config",
        fixtures().join("demo_config.json").to_str().unwrap(),
        "--data",
        fixtures().join("demo_poisson.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    for file in [
        "fit_report.json",
        "coefficients.csv",
        "diagnostics.json",
        "smooth_x1.csv",
        "smooth_x2.csv",
        "smooth_x3.csv",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    // p + 1 coefficient rows after the header.
    let coef = std::fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert_eq!(coef.lines().count(), 1 + 4);
    assert!(coef.starts_with("name,estimate,posterior_sd,lo90,hi90,lo95,hi95"));

    // Smooth band files carry the fine grid (default 100 rows).
    let band = std::fs::read_to_string(out.join("smooth_x1.csv")).unwrap();
    assert_eq!(band.lines().count(), 1 + 100);

    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("diagnostics.json")).unwrap())
            .unwrap();
    assert_eq!(diag["method"], "grid");
    assert_eq!(diag["v_hat"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_inputs_exit_with_the_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    // Unknown column in the config.
    let config = dir.path().join("bad_column.json");
    write(
        &config,
        r#"{"response":"y","family":{"kind":"poisson"},"smooth":[{"name":"nope"}]}"#,
    );
    let output = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--data",
        fixtures().join("demo_poisson.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nope"), "{stderr}");

    // Missing cell in the data names its location.
    let data = dir.path().join("missing.csv");
    write(&data, "y,x1\n1,0.5\n2,\n0,-0.5\n");
    let config = dir.path().join("tiny.json");
    write(
        &config,
        r#"{"response":"y","family":{"kind":"poisson"},"smooth":[{"name":"x1","basis_size":6}]}"#,
    );
    let output = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("row 2") && stderr.contains("x1"), "{stderr}");
}

#[test]
fn degenerate_design_exits_with_the_design_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("constant.csv");
    let mut text = String::from("y,x1\n");
    for i in 0..30 {
        let _ = writeln!(text, "{},0.4", i % 3);
    }
    write(&data, &text);
    let config = dir.path().join("config.json");
    write(
        &config,
        r#"{"response":"y","family":{"kind":"poisson"},"smooth":[{"name":"x1","basis_size":6}]}"#,
    );
    let output = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3), "{output:?}");
}

#[test]
fn five_smooth_models_dispatch_to_independence_sampling() {
    let dir = tempfile::tempdir().unwrap();

    // Build a 5-smooth dataset from the six-smooth scenario generator.
    let scenario = lps_sim::Scenario::new(lps_sim::ScenarioKind::SixSmoothNormal, 150, 1, 9);
    let r = scenario.generate(0);
    let mut csv = String::from("y,x1,x2,x3,x4,x5\n");
    for i in 0..150 {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.y[i],
            r.x[(i, 0)],
            r.x[(i, 1)],
            r.x[(i, 2)],
            r.x[(i, 3)],
            r.x[(i, 4)]
        );
    }
    let data = dir.path().join("q5.csv");
    write(&data, &csv);
    let config = dir.path().join("q5.json");
    write(
        &config,
        r#"{
  "response": "y",
  "family": { "kind": "gaussian" },
  "smooth": [
    {"name": "x1", "basis_size": 8}, {"name": "x2", "basis_size": 8},
    {"name": "x3", "basis_size": 8}, {"name": "x4", "basis_size": 8},
    {"name": "x5", "basis_size": 8}
  ],
  "explorer": { "chain_length": 60, "seed": 3 }
}"#,
    );
    let out = dir.path().join("out");
    let output = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("diagnostics.json")).unwrap())
            .unwrap();
    assert_eq!(diag["method"], "imh");
    assert_eq!(diag["ensemble_size"], 60);
    assert!(diag["acceptance_rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_writes_metrics_and_optional_timing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let output = run(&[
        "simulate",
        "--scenario",
        "normal",
        "--n",
        "80",
        "--reps",
        "2",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("variant,target,name,statistic,level,value"));
    assert!(metrics.contains("lps,beta,beta1,bias"));
    assert!(metrics.contains("lpsmap,smooth,f3,cp_avg,99"));
    assert!(metrics.contains("lps,run,,failures,,0"));
    assert!(!out.join("timing.csv").exists());

    let out2 = dir.path().join("sim_timed");
    let output = run(&[
        "simulate",
        "--scenario",
        "normal",
        "--n",
        "80",
        "--reps",
        "2",
        "--seed",
        "3",
        "--timing",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let timing = std::fs::read_to_string(out2.join("timing.csv")).unwrap();
    assert!(timing.starts_with("scenario,n,q,reps,mean_fit_seconds"));
    assert!(timing.contains("normal,80,3,2,"));
}

#[test]
fn unknown_scenario_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "simulate",
        "--scenario",
        "gamma",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn check_derivatives_succeeds_on_a_small_model() {
    let output = run(&[
        "check-derivatives",
        "--q",
        "2",
        "--n",
        "80",
        "--points",
        "4",
        "--seed",
        "2",
    ]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("PASS"), "{stdout}");
}
