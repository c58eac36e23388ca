use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pipeline(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipeline"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeline(dir.path(), &["synth", "--out", "fx"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

#[test]
fn full_run_then_every_command() {
    let tmp = fixture();
    let dir = tmp.path().join("fx");
    let o = pipeline(&dir, &["run"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("articles loaded 50"));

    let o = pipeline(&dir, &["export", "--format", "geojson", "--years", "2010", "--attackers", "farc,eln,government"]);
    assert_eq!(code(&o), 0);
    assert!(dir.join("out/export/events.geojson").exists());
    assert!(dir.join("out/export/events.geojson.note.json").exists());

    let o = pipeline(&dir, &["export", "--format", "csv", "--types", "murder", "--out", "m.csv"]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(dir.join("m.csv")).unwrap().starts_with("article_id,"));

    let o = pipeline(&dir, &["dedup", "train", "--labels", "labels.csv", "--seed", "7", "--out", "model.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.join("model.json").exists());

    let o = pipeline(&dir, &["dedup", "calibrate", "--target-rate", "0.242", "--model", "model.json"]);
    assert_eq!(code(&o), 0);
    let cal: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cal["target_rate"], 0.242);

    let o = pipeline(&dir, &["link", "--reference", "reference", "--out", "link/overlap.json"]);
    assert_eq!(code(&o), 0);
    assert!(dir.join("link/overlap.matches.csv").exists());

    let o = pipeline(&dir, &["regress", "--spec", "specs.json", "--out", "tables"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.join("tables/summary.csv").exists());

    let o = pipeline(&dir, &["evaluate", "--labels", "gold.csv"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("victim_count\t10\t9\t90.0%"));
}

#[test]
fn validation_failures_exit_2() {
    let tmp = fixture();
    let dir = tmp.path().join("fx");
    for args in [
        &["-c", "missing.json", "run"][..],
        &["run", "--stages", "extract,frobnicate"],
        &["run", "--stages", "dedup"],
        &["dedup", "calibrate", "--target-rate", "1.5"],
        &["link", "--reference", "nowhere"],
        &["run", "--bogus-flag"],
    ] {
        let o = pipeline(&dir, args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!dir.join("out").exists());

    pipeline(&dir, &["run"]);
    let o = pipeline(&dir, &["export", "--attackers", "farc,martians"]);
    assert_eq!(code(&o), 2);
    let o = pipeline(&dir, &["export", "--types", "arson"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_template_exits_2_and_writes_nothing() {
    let tmp = fixture();
    let dir = tmp.path().join("fx");
    let cfg = fs::read_to_string(dir.join("run.json")).unwrap();
    fs::write(dir.join("bad.json"), cfg.replacen('{', "{\"template\": \"nope.txt\",", 1)).unwrap();
    let o = pipeline(&dir, &["-c", "bad.json", "run"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("template not found"));
    assert!(!dir.join("out").exists());
}

#[test]
fn stage_failure_exits_1_and_keeps_artifacts() {
    let tmp = fixture();
    let dir = tmp.path().join("fx");
    assert_eq!(code(&pipeline(&dir, &["run", "--stages", "ingest,extract"])), 0);
    let index = fs::read(dir.join("out/artifacts.json")).unwrap();
    let scope = dir.join("fixtures/scope");
    let first = fs::read_dir(&scope).unwrap().next().unwrap().unwrap().path();
    fs::remove_file(first).unwrap();
    let o = pipeline(&dir, &["run", "--stages", "filter"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(dir.join("out/artifacts.json")).unwrap(), index);
}
