use std::path::Path;
use std::process::{Command, Output};

use gvnn_kit::data::{load_csv_signal, MapConfig, MapKind};
use gvnn_kit::train::Checkpoint;
use serde_json::Value;

fn gvnn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gvnn-kit"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generated_csv_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = gvnn(
        dir.path(),
        &[
            "generate", "--map", "lorenz", "--length", "150", "--seed", "3", "--out", "x.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let loaded = load_csv_signal(&dir.path().join("x.csv"), false).unwrap();
    let mut cfg = MapConfig::new(MapKind::CoupledLorenz, 3);
    cfg.length = 150;
    assert_eq!(loaded, cfg.simulate().unwrap());

    let sidecar = json(&dir.path().join("x.csv.json"));
    let manifest = std::fs::read_to_string(dir.path().join("x.csv.manifest.json")).unwrap();
    assert_eq!(
        sidecar["manifest_sha256"].as_str().unwrap(),
        gvnn_kit::cli::sha256_hex(manifest.as_bytes())
    );
}

#[test]
fn eval_reproduces_training_report() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--map", "macarthur", "--length", "240", "--seed", "8"];
    let mut train = vec!["train", "--epochs", "4", "--hidden", "8", "--out", "run"];
    train.extend(common);
    assert!(gvnn(dir.path(), &train).status.success());
    let mut eval = vec!["eval", "--checkpoint", "run/checkpoint.json", "--out", "m.json"];
    eval.extend(common);
    let out = gvnn(dir.path(), &eval);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report = json(&dir.path().join("run/report.json"));
    let metrics = json(&dir.path().join("m.json"));
    assert_eq!(metrics["mse"], report["report"]["test_mse"]);
    assert_eq!(metrics["persistence_mse"], report["report"]["persistence_test_mse"]);
    assert!(Checkpoint::load(&dir.path().join("run/checkpoint.json")).is_ok());
    let curve = std::fs::read_to_string(dir.path().join("run/curve.csv")).unwrap();
    assert_eq!(curve.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5);
}

#[test]
fn corrupt_checkpoint_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), "{\"format\": \"gvnn-kit\", \"version\": 9}").unwrap();
    let out = gvnn(
        dir.path(),
        &["eval", "--checkpoint", "c.json", "--map", "hopfield", "--out", "m.json"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn verify_with_zero_trials_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = gvnn(dir.path(), &["verify", "--trials", "0", "--out", "v.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("v.json"));
    assert_eq!(v["total"], 0);
    assert_eq!(v["failed"], 0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# trials from file\ntrials = 1\nseed = 4\n").unwrap();
    assert!(gvnn(dir.path(), &["verify", "--config", "run.cfg", "--out", "a.json"])
        .status
        .success());
    assert!(gvnn(
        dir.path(),
        &["verify", "--config", "run.cfg", "--trials", "2", "--out", "b.json"]
    )
    .status
    .success());
    let a = json(&dir.path().join("a.json"))["total"].as_u64().unwrap();
    let b = json(&dir.path().join("b.json"))["total"].as_u64().unwrap();
    assert_eq!(b, 2 * a);
}

#[test]
fn invalid_arguments_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_key = dir.path().join("bad.cfg");
    std::fs::write(&unknown_key, "trails = 3\n").unwrap();
    for args in [
        vec!["train", "--map", "hopfield", "--lr", "nan", "--out", "r"],
        vec!["train", "--map", "hopfield", "--node-fn", "cubic", "--out", "r"],
        vec!["verify", "--config", "bad.cfg", "--out", "v.json"],
        vec!["bench", "--T-list", "0,8", "--out", "b.csv"],
        vec!["frobnicate"],
    ] {
        let out = gvnn(dir.path(), &args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn missing_input_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = gvnn(dir.path(), &["gvft", "--data", "absent.csv", "--out", "g.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bench_writes_verified_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = gvnn(
        dir.path(),
        &[
            "bench",
            "--B",
            "2",
            "--N",
            "4",
            "--T-list",
            "4,8",
            "--repeats",
            "1",
            "--out",
            "b.csv",
            "--svg",
            "b.svg",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').nth(7) == Some("true")));
    assert!(std::fs::read_to_string(dir.path().join("b.svg"))
        .unwrap()
        .starts_with("<svg"));
}
