use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polygrowth"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_and_experiment_are_usage_errors() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["experiment", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn cdf_table_hits_the_support_endpoints() {
    let out = bin()
        .args(["tabulate", "cdf", "--lambda", "0.5", "--rho", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,z_cdf");
    assert_eq!(lines[1], "1,0");
    assert_eq!(*lines.last().unwrap(), "4,1");
}

#[test]
fn tabulate_rejects_svg() {
    let out = bin()
        .args(["tabulate", "shape", "--format", "svg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sampling_is_deterministic_in_the_seed() {
    let run = || {
        let out = bin()
            .args([
                "sample", "--lambda", "0.5", "--rho", "1", "--horizon", "8", "--seed", "11",
                "--format", "json",
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        stdout(&out)
    };
    assert_eq!(run(), run());
}

#[test]
fn simulate_png_svg_draws_an_image() {
    let out = bin()
        .args(["simulate", "png", "--horizon", "8", "--seed", "4", "--format", "svg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("<svg"));
}

#[test]
fn env_var_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("POLYGROWTH_OUT", dir.path())
        .args(["sample", "--horizon", "5", "--seed", "2", "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("config_2.csv");
    assert!(path.exists());
    assert!(stdout(&out).trim().ends_with("config_2.csv"));
}

#[test]
fn experiment_merges_config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    std::fs::write(
        &config,
        r#"{"experiment": "shape_check", "horizon": 30.0, "replicas": 5, "seed": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args([
            "experiment",
            "shape_check",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "9",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    let text = stdout(&out);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    // Flag beats file, file beats defaults; the effective spec is echoed.
    assert_eq!(doc["spec"]["seed"], 9);
    assert_eq!(doc["spec"]["horizon"], 30.0);
    assert_eq!(doc["spec"]["replicas"], 5);
    let all_pass = doc["summary"]["valid"].as_bool().unwrap()
        && doc["summary"]["verdicts"]
            .as_array()
            .unwrap()
            .iter()
            .all(|v| v["pass"].as_bool().unwrap());
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
    assert!(Path::new(&dir.path().join("records.jsonl")).exists());
    assert!(Path::new(&dir.path().join("summary.json")).exists());
}

#[test]
fn experiment_rejects_a_conflicting_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    std::fs::write(&config, r#"{"experiment": "tail_check"}"#).unwrap();
    let out = bin()
        .args(["experiment", "shape_check", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameter_regime_is_a_usage_error() {
    let out = bin()
        .args(["experiment", "lln_stationary", "--lambda", "0.5", "--replicas", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
