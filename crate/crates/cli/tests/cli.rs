use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BINARY: &str = env!("CARGO_BIN_EXE_gwrc");

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn gwrc(args: &[&str]) -> Output {
    Command::new(BINARY).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const BINARY_UNIT: &str = r#"{"offspring":{"2":1.0},"conductance":{"default":{"family":"constant","c":1.0}}}"#;
const EQUAL_MEAN: &str =
    r#"{"offspring":{"2":1.0},"conductance":{"default":{"family":"two_point","v1":0.5,"v2":1.5,"p2":0.5}}}"#;

#[test]
fn srw_reports_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", BINARY_UNIT);
    let v = stdout_json(&gwrc(&["speed", "--method", "srw", "--config", cfg.to_str().unwrap(), "--seed", "5"]));
    assert_eq!(v["v_srw"].as_f64().unwrap(), 1.0 / 3.0);
    assert_eq!(v["schema"], "v1");
    assert_eq!(v["seed"], 5);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn dump_tree_sizes_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", BINARY_UNIT);
    let cfg = cfg.to_str().unwrap();
    let single = stdout_json(&gwrc(&["dump-tree", "--config", cfg, "--seed", "1", "--depth", "0"]));
    assert_eq!(single["tree"]["nodes"].as_array().unwrap().len(), 1);
    assert!(single["tree"]["edges"].as_array().unwrap().is_empty());

    let a = gwrc(&["dump-tree", "--config", cfg, "--seed", "1", "--depth", "1"]);
    let b = gwrc(&["dump-tree", "--config", cfg, "--seed", "1", "--depth", "1", "--workers", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["tree"]["nodes"].as_array().unwrap().len(), 4);
    assert_eq!(v["tree"]["edges"].as_array().unwrap().len(), 3);
}

#[test]
fn missing_seed_is_drawn_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", BINARY_UNIT);
    let v = stdout_json(&gwrc(&["dump-tree", "--config", cfg.to_str().unwrap(), "--depth", "2"]));
    let seed = v["seed"].as_u64().unwrap();
    let again = gwrc(&[
        "dump-tree",
        "--config",
        cfg.to_str().unwrap(),
        "--depth",
        "2",
        "--seed",
        &seed.to_string(),
    ]);
    assert_eq!(stdout_json(&again), v);
}

#[test]
fn errors_are_json_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"offspring":{"0":0.2,"2":0.8},"conductance":{"default":{"family":"constant","c":1.0}}}"#,
    );
    let out = gwrc(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "ZeroNotAllowed");
    assert_eq!(err["error"]["field"], "offspring.0");

    let syntax = write_config(dir.path(), "syntax.json", "{\"offspring\": {\"2\": 1.0},\n  \"conductance\": 3}");
    let out = gwrc(&["run", "--config", syntax.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "ParseError");
    assert_eq!(err["error"]["line"], 2);

    let cfg = write_config(dir.path(), "c.json", BINARY_UNIT);
    let out = gwrc(&["dump-tree", "--config", cfg.to_str().unwrap(), "--depth", "40"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "BudgetExceeded");

    let out = gwrc(&["speed", "--method", "formula", "--config", cfg.to_str().unwrap(), "--samples", "5"]);
    assert!(out.status.success());
    let out = gwrc(&["slowdown", "--config", cfg.to_str().unwrap(), "--samples", "5"]);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "DegenerateLaw");
}

#[test]
fn ex1_csv_layout_and_atomic_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", BINARY_UNIT);
    let out_path = dir.path().join("ex1.csv");
    let out = gwrc(&[
        "ex1",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "0.5:1,0.0001:10",
        "--samples",
        "50",
        "--format",
        "csv",
        "--seed",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "eps,a,eta,v_hat,ci,reference,config_hash,seed");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..3], &["0.5", "1", "0.5"]);
    assert_eq!(first[7], "2");
    assert_eq!(lines.count(), 1);
    // nothing but the result is left in the directory
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 2);
}

#[test]
fn bounds_and_theta_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", BINARY_UNIT);
    let cfg = cfg.to_str().unwrap();
    let v = stdout_json(&gwrc(&["bounds", "--config", cfg, "--seed", "1", "--path", "0,1", "--tolerance", "1e-6"]));
    for key in ["node", "lower", "upper", "depth_used", "tolerance_met"] {
        assert!(!v[key].is_null(), "{key}");
    }
    assert!((v["lower"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["tolerance_met"], true);

    let v = stdout_json(&gwrc(&["theta", "--config", cfg, "--seed", "1", "--walks", "30", "--confirm-level", "5"]));
    let theta = v["theta"].as_array().unwrap();
    assert_eq!(theta.len(), 3);
    let total: f64 = theta.iter().map(|t| t["empirical"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn slowdown_verdict_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", EQUAL_MEAN);
    // too few samples to decide
    let out = gwrc(&["slowdown", "--config", cfg.to_str().unwrap(), "--samples", "20", "--seed", "1"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    match v["verdict"].as_str().unwrap() {
        "INCONCLUSIVE" => assert_eq!(out.status.code(), Some(2)),
        "SLOWDOWN" => assert_eq!(out.status.code(), Some(0)),
        other => panic!("{other}"),
    }
    let out = gwrc(&["slowdown", "--config", cfg.to_str().unwrap(), "--samples", "3000", "--seed", "1"]);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "SLOWDOWN");
}

#[test]
fn selfcheck_passes_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"offspring":{"1":0.3,"2":0.4,"3":0.3},"conductance":{"default":{"family":"lognormal","mu_log":0.0,"sigma_log":1.0}}}"#,
    );
    let cfg = cfg.to_str().unwrap();
    let one = gwrc(&["selfcheck", "--config", cfg, "--seed", "3", "--workers", "1"]);
    let four = gwrc(&["selfcheck", "--config", cfg, "--seed", "3", "--workers", "4"]);
    assert_eq!(one.stdout, four.stdout);
    let v = stdout_json(&one);
    assert_eq!(v["pass"], true, "{v}");
    assert_eq!(v["items"].as_array().unwrap().len(), 4);
}
