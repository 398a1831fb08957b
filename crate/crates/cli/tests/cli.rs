use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn learnsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_learnsel")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(name: &str) -> String {
    scenario(name).to_str().unwrap().to_string()
}

#[test]
fn every_command_runs_and_repeats_byte_for_byte() {
    let three_features = path("three_features.json");
    let two = path("two_features.json");
    let tab = path("tabulated.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["eval-static", &three_features],
        vec!["plan-static", &tab],
        vec!["plan-stationary", &tab],
        vec!["switch-points", &tab],
        vec!["sweep-delta", &tab, "--grid", "50"],
        vec!["sweep-heatmap", &two, "--grid", "20"],
        vec!["enumerate-subsets", &tab],
        vec!["verify", &two, "-T", "3"],
        vec!["misspec", &two, "--kind", "phi-sum", "--eps", "0.2", "--trials", "300", "--seed", "4"],
    ];
    for args in runs {
        for format in ["json", "csv"] {
            let mut full = args.clone();
            full.extend(["--format", format]);
            let first = learnsel(&full);
            assert!(first.status.success(), "{full:?}: {}", String::from_utf8_lossy(&first.stderr));
            let again = learnsel(&full);
            assert_eq!(first.stdout, again.stdout, "{full:?} is not reproducible");
            full.push("--sequential");
            let serial = learnsel(&full);
            assert_eq!(first.stdout, serial.stdout, "{full:?} depends on threading");
        }
    }
}

#[test]
fn verify_passes_on_two_feature_scenario() {
    let out = learnsel(&["verify", &path("two_features.json"), "-T", "3"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["holds"], true);
    assert_eq!(v["stationary_subset"], "2");
}

#[test]
fn csv_uses_fifteen_significant_digits() {
    let out = learnsel(&["switch-points", &path("two_features.json"), "--format", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,j,delta_i,delta_d,threshold"));
    assert_eq!(lines.next(), Some("1,2,0.84,2.1275,0.605170387779083"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("plan.json");
    let out = learnsel(&["plan-stationary", &path("three_features.json"), "--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(v["subset"], "1+2+3");
    assert!((v["loss"].as_f64().unwrap() - 0.2525).abs() < 1e-12);
}

#[test]
fn input_errors_exit_two_with_json_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"features\": [\n    {\"a\": 0.3, \"h0\": }\n  ]\n}\n").unwrap();
    let out = learnsel(&["plan-static", broken.to_str().unwrap(), "--error-format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(v["error"]["kind"], "parse");
    assert_eq!(v["error"]["line"], 3);

    let edge = dir.path().join("edge.json");
    let text = std::fs::read_to_string(scenario("three_features.json")).unwrap().replace("0.9", "1.0");
    std::fs::write(&edge, text).unwrap();
    let out = learnsel(&["plan-static", edge.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta must lie strictly inside (0,1)"));

    let out = learnsel(&["misspec", &path("three_features.json"), "--kind", "human-static", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("|h_i - a_i|"));

    assert_eq!(learnsel(&["verify", &path("three_features.json")]).status.code(), Some(2));
    assert_eq!(learnsel(&["plan-static"]).status.code(), Some(2));
}

#[test]
fn zero_coefficient_override_warns() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.json");
    let text = std::fs::read_to_string(scenario("three_features.json"))
        .unwrap()
        .replace("\"a\": 0.2", "\"a\": 0.0");
    std::fs::write(&zero, text).unwrap();
    assert_eq!(learnsel(&["plan-static", zero.to_str().unwrap()]).status.code(), Some(2));
    let out = learnsel(&["plan-static", zero.to_str().unwrap(), "--allow-zero-coeff"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: zero ground-truth coefficient for x2"));
}

#[test]
fn cap_eps_clips_to_admissible_error() {
    let out = learnsel(&[
        "misspec",
        &path("three_features.json"),
        "--kind",
        "human-static",
        "--eps",
        "0.1",
        "--cap-eps",
        "--trials",
        "200",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["margins"][1]["epsilon"], 0.0);
    assert!((v["margins"][2]["epsilon"].as_f64().unwrap() - 0.05).abs() < 1e-15);
    assert_eq!(v["validation"]["violations"], 0);
}
