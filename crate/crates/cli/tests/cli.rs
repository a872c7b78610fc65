use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn portnav(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_portnav"))
        .current_dir(dir)
        .env("RUST_BACKTRACE", "0")
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .expect("spawning portnav")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = portnav(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&read(path)).unwrap()
}

const SMALL: &[&str] = &["--desk", "--trials", "2", "--episodes", "3"];

#[test]
fn fully_routine_schedules_match_across_episodes() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["gen-schedule", "--desk", "--scheme", "fully-routine", "--episodes", "0,17", "--out", "s"]);
    assert_eq!(read(tmp.path().join("s/schedule_ep0.json")), read(tmp.path().join("s/schedule_ep17.json")));
    ok(tmp.path(), &["gen-schedule", "--desk", "--scheme", "random", "--episodes", "0,17", "--out", "r"]);
    assert_ne!(read(tmp.path().join("r/schedule_ep0.json")), read(tmp.path().join("r/schedule_ep17.json")));
}

#[test]
fn eval_is_reproducible_and_stats_recomputes_it() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let mut args = vec!["eval", "--agent", "complete", "--jobs", "2", "--out", out];
        args.extend_from_slice(SMALL);
        ok(tmp.path(), &args);
    }
    for f in ["report.json", "report.csv", "trials.json", "manifest.json"] {
        assert_eq!(read(tmp.path().join("a").join(f)), read(tmp.path().join("b").join(f)), "{f}");
    }
    let manifest = json(tmp.path().join("a/manifest.json"));
    assert_eq!(manifest["command"], "eval");
    assert!(manifest["outputs"].get("report.json").is_some());

    ok(tmp.path(), &["stats", "--desk", "--trials", "a/trials.json", "--out", "s"]);
    assert_eq!(read(tmp.path().join("a/report.json")), read(tmp.path().join("s/report.json")));
}

#[test]
fn recorded_traffic_replays_to_the_same_report() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rec = vec!["eval", "--record", "--out", "rec"];
    rec.extend_from_slice(SMALL);
    ok(tmp.path(), &rec);
    let mut rep = vec!["eval", "--oracle", "replay:rec/traffic", "--out", "rep"];
    rep.extend_from_slice(SMALL);
    ok(tmp.path(), &rep);
    assert_eq!(read(tmp.path().join("rec/trials.json")), read(tmp.path().join("rep/trials.json")));
    let inputs = json(tmp.path().join("rep/manifest.json"))["inputs"].as_object().unwrap().len();
    assert_eq!(inputs, 2);
}

#[test]
fn bench_writes_every_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["bench", "--protocol", "desk", "--trials", "1", "--episodes", "2", "--out", "b"];
    args.extend_from_slice(&["--jobs", "2"]);
    ok(tmp.path(), &args);
    let rows = json(tmp.path().join("b/bench.json"));
    assert_eq!(rows.as_array().map(Vec::len), Some(9));
    let csv = String::from_utf8(read(tmp.path().join("b/bench.csv"))).unwrap();
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn oracle_reports_value_path_and_starts() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["oracle", "--desk", "--scheme", "random", "--wait", "--episodes", "4", "--out", "o"]);
    let r = json(tmp.path().join("o/optimal.json"));
    let value = r["optimal_value"].as_u64().unwrap();
    assert!(value <= 5);
    assert_eq!(r["path"].as_array().unwrap().len(), 31);
    assert_eq!(r["per_start_values"].as_object().unwrap().len(), 20);
    let v = json(tmp.path().join("o/variance.json"));
    assert_eq!(v["values"].as_array().unwrap().len(), 4);
}

#[test]
fn train_then_eval_tabular_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["train", "--desk", "--learner", "tabular", "--episodes", "20", "--out", "t"]);
    assert_eq!(String::from_utf8(read(tmp.path().join("t/training.csv"))).unwrap().lines().count(), 21);
    let mut args = vec!["eval", "--agent", "tabular:t/checkpoint.json", "--out", "e"];
    args.extend_from_slice(SMALL);
    ok(tmp.path(), &args);
    assert!(json(tmp.path().join("e/report.json")).is_object());
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("typo.json"), r#"{"protocl": {}}"#).unwrap();
    let out = portnav(tmp.path(), &["eval", "--config", "typo.json", "--out", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("protocl"));

    let out = portnav(tmp.path(), &["eval", "--desk", "--oracle", "nope", "--out", "x"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle:"));

    let out = portnav(tmp.path(), &["eval", "--desk", "--waiting-period", "0", "--out", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("protocol"));

    let out = portnav(tmp.path(), &["oracle", "--objects", "mug,pillow", "--out", "x"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("pillow"));
}

#[test]
fn bad_usage_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(portnav(tmp.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(portnav(tmp.path(), &["eval", "--scheme", "sometimes"]).status.code(), Some(2));
}
