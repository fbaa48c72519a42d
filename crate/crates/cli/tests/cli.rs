use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn zsomg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zsomg")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_matching_pennies_writes_outputs_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let (out, trace) = (dir.path().join("summary.json"), dir.path().join("trace.csv"));
    let run = zsomg(&["solve", "--builtin", "matching-pennies", "--epsilon", "0.05", "--out", s(&out), "--trace", s(&trace)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let summary = read_json(&out);
    assert!(summary["gap"].as_f64().unwrap() <= 0.05);
    assert!(summary["lower"].as_f64().unwrap() <= 0.0 && summary["upper"].as_f64().unwrap() >= 0.0);
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("trial,depth,width,threshold,u_value,l_value,occupancy_support\n"));
    let hash = stdout_json(&zsomg(&["validate", "--builtin", "matching-pennies"]))["hash"].clone();
    for path in [&out, &trace] {
        let mut name = path.file_name().unwrap().to_os_string();
        name.push(".manifest.json");
        let manifest = read_json(&path.with_file_name(name));
        assert_eq!(manifest["command"], "solve");
        assert_eq!(manifest["model"], "builtin:matching-pennies");
        assert_eq!(manifest["model_hash"], hash);
        assert_eq!(manifest["config"]["epsilon"], 0.05);
        assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn oversized_rho_is_a_config_error() {
    let run = zsomg(&["solve", "--builtin", "matching-pennies", "--epsilon", "0.05", "--rho", "1.0"]);
    assert_eq!(code(&run), 2);
    assert!(String::from_utf8_lossy(&run.stderr).contains("rho"));
}

#[test]
fn bad_model_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(fixture("matching_pennies.json")).unwrap().replacen("\"p\": 1.0", "\"p\": 0.9", 1);
    std::fs::write(&bad, text).unwrap();
    assert_eq!(code(&zsomg(&["solve", "--model", s(&bad)])), 1);
    assert_eq!(code(&zsomg(&["validate", "--model", s(&bad)])), 1);
    assert_eq!(code(&zsomg(&["validate", "--model", s(&dir.path().join("missing.json"))])), 1);
    assert_eq!(code(&zsomg(&["solve", "--builtin", "bogus"])), 1);
}

#[test]
fn trial_budget_exhaustion_exits_3() {
    let run = zsomg(&["solve", "--builtin", "adversarial-tiger", "--horizon", "2", "--epsilon", "0.01", "--max-trials", "1"]);
    assert_eq!(code(&run), 3);
    let summary = stdout_json(&run);
    assert_eq!(summary["trials"], 1);
    assert_eq!(summary["converged"], false);
}

#[test]
fn oracle_values_and_golden_output() {
    let run = zsomg(&["oracle", "--builtin", "matching-pennies"]);
    assert_eq!(code(&run), 0);
    assert!(stdout_json(&run)["value"].as_f64().unwrap().abs() < 1e-12);
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("golden.json");
    let run = zsomg(&["oracle", "--builtin", "adversarial-tiger", "--horizon", "2", "--write-golden", s(&g)]);
    assert_eq!(code(&run), 0);
    let golden = read_json(&g);
    assert_eq!(golden, read_json(&fixture("golden_adversarial_tiger_h2.json")));
    assert!(dir.path().join("golden.json.manifest.json").exists());
}

#[test]
fn full_tiger_fits_the_guard_but_a_deeper_one_does_not() {
    let run = zsomg(&["oracle", "--builtin", "adversarial-tiger", "--horizon", "3"]);
    assert_eq!(code(&run), 0);
    let v = stdout_json(&run)["value"].as_f64().unwrap();
    assert!((v - read_json(&fixture("golden_adversarial_tiger_h3.json"))["value"].as_f64().unwrap()).abs() < 1e-9);
    assert_eq!(code(&zsomg(&["oracle", "--builtin", "adversarial-tiger", "--horizon", "5"])), 4);
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn eval_uniform_profile() {
    let dir = tempfile::tempdir().unwrap();
    let u = write(dir.path(), "u.json", r#"{"0": {"-": [0.5, 0.5]}}"#);
    let run = zsomg(&["eval", "--builtin", "matching-pennies", "--p1", s(&u), "--p2", s(&u), "--exploitability"]);
    assert_eq!(code(&run), 0);
    let e = stdout_json(&run);
    assert_eq!(e["value"].as_f64().unwrap(), 0.0);
    assert!(e["exploitability"].as_f64().unwrap().abs() < 1e-12);
    let heads = write(dir.path(), "h.json", r#"{"0": {"-": [1.0, 0.0]}}"#);
    let run = zsomg(&["eval", "--builtin", "matching-pennies", "--p1", s(&heads), "--p2", s(&heads)]);
    assert_eq!(stdout_json(&run)["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn strategy_missing_a_reachable_history_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let partial = write(dir.path(), "p.json", r#"{"0": {"-": [0.5, 0.5]}, "1": {"a0z0": [1.0, 0.0]}}"#);
    let run = zsomg(&["eval", "--builtin", "matching-pennies-2step", "--p1", s(&partial), "--p2", s(&partial)]);
    assert_eq!(code(&run), 5, "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn extracted_strategies_evaluate_with_small_exploitability() {
    let dir = tempfile::tempdir().unwrap();
    let sdir = dir.path().join("strategies");
    let run = zsomg(&["solve", "--builtin", "matching-pennies-2step", "--epsilon", "0.05", "--strategies", s(&sdir)]);
    assert_eq!(code(&run), 0);
    let run = zsomg(&[
        "eval",
        "--builtin",
        "matching-pennies-2step",
        "--p1",
        s(&sdir.join("p1.json")),
        "--p2",
        s(&sdir.join("p2.json")),
        "--exploitability",
    ]);
    assert_eq!(code(&run), 0);
    assert!(stdout_json(&run)["exploitability"].as_f64().unwrap() <= 0.05 + 2.0 * 0.005);
}

#[test]
fn identical_flags_give_identical_summaries() {
    let strip = |run: Output| {
        let mut v = stdout_json(&run);
        v.as_object_mut().unwrap().remove("wallclock_ms");
        v
    };
    let args = ["solve", "--builtin", "matching-pennies-2step", "--epsilon", "0.05", "--seed", "3"];
    assert_eq!(strip(zsomg(&args)), strip(zsomg(&args)));
}

#[test]
fn validate_round_trips_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tiger.json");
    let run = zsomg(&["validate", "--model", s(&fixture("adversarial_tiger.json")), "--write-canonical", s(&out)]);
    assert_eq!(code(&run), 0);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture("adversarial_tiger.json")).unwrap());
    let info = stdout_json(&run);
    assert_eq!(info["states"], 2);
    assert_eq!(info["lambda_r"], 1.25);
}
