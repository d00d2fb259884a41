use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nearelastic"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nearelastic-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(config: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(config).args(extra).output().unwrap()
}

const WALK: &str = r#"{
  "seed": 9,
  "replicas": 2000,
  "experiment": {
    "kind": "walk-parity",
    "walk": {
      "odd": {"step": "direct", "law": "uniform", "lo": 1.0, "hi": 2.0},
      "even": {"step": "direct", "law": "uniform", "lo": 2.0, "hi": 4.0},
      "start": 0.0, "lambda": 1.0, "n": 200
    },
    "target": 0.6666666666666666,
    "scan": [50, 100]
  }
}"#;

#[test]
fn writes_results_and_tables() {
    let dir = scratch("files");
    let cfg = dir.join("walk.json");
    fs::write(&cfg, WALK).unwrap();
    let out = run(&cfg, &["--out", dir.join("out").to_str().unwrap(), "--threads", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("walk-parity p_even"), "{stdout}");

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("out/results.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["experiment"], "walk-parity");
    assert_eq!(json["config"]["seed"], 9);
    let recs = json["records"].as_array().unwrap();
    assert!(recs.iter().any(|r| r["quantity"] == "p_even" && r["trials"] == 2000));

    let csv = fs::read_to_string(dir.join("out/results.csv")).unwrap();
    assert!(csv.starts_with("experiment,quantity,parameters,estimate,ci_lo,ci_hi"));
    let scan = fs::read_to_string(dir.join("out/parity_scan.csv")).unwrap();
    assert_eq!(scan.lines().count(), 3);
}

#[test]
fn seed_and_replica_overrides() {
    let dir = scratch("overrides");
    let cfg = dir.join("walk.json");
    fs::write(&cfg, WALK).unwrap();
    let a = dir.join("a");
    let b = dir.join("b");
    assert!(run(&cfg, &["--out", a.to_str().unwrap(), "--seed", "1", "--replicas", "500"]).status.success());
    assert!(run(&cfg, &["--out", b.to_str().unwrap(), "--seed", "2", "--replicas", "500"]).status.success());
    let ja = fs::read_to_string(a.join("results.json")).unwrap();
    let jb = fs::read_to_string(b.join("results.json")).unwrap();
    assert!(ja.contains("\"replicas\": 500"));
    assert_ne!(ja, jb);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = scratch("threads");
    let cfg = dir.join("walk.json");
    fs::write(&cfg, WALK).unwrap();
    let mut files = Vec::new();
    for t in ["1", "3"] {
        let o = dir.join(format!("t{t}"));
        assert!(run(&cfg, &["--out", o.to_str().unwrap(), "--threads", t]).status.success());
        files.push((fs::read(o.join("results.json")).unwrap(), fs::read(o.join("parity_scan.csv")).unwrap()));
    }
    assert!(files[0] == files[1], "outputs differ between thread counts");
}

#[test]
fn assert_flag_sets_exit_code() {
    let dir = scratch("assert");
    let cfg = dir.join("walk.json");
    // a target far from the true parity probability
    fs::write(&cfg, WALK.replace("0.6666666666666666", "0.2")).unwrap();
    let o = dir.join("out");
    let lax = run(&cfg, &["--out", o.to_str().unwrap()]);
    assert!(lax.status.success());
    let strict = run(&cfg, &["--out", o.to_str().unwrap(), "--assert"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stdout).contains("FAIL"));
}

#[test]
fn bad_config_reports_field_and_line() {
    let dir = scratch("diag");
    let cfg = dir.join("bad.json");
    fs::write(&cfg, WALK.replace("\"lambda\": 1.0", "\"lambda\": \"fast\"")).unwrap();
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("experiment.walk.lambda"), "{err}");
    assert!(err.contains("line 9"), "{err}");
}

#[test]
fn out_of_range_eps_is_rejected() {
    let dir = scratch("eps");
    let cfg = dir.join("bad.json");
    fs::write(&cfg, WALK.replace("\"replicas\": 2000,", "\"replicas\": 2000, \"eps\": [0.5, 2.0],")).unwrap();
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps[1]"));
}

#[test]
fn zero_threads_is_an_error() {
    let dir = scratch("zero");
    let cfg = dir.join("walk.json");
    fs::write(&cfg, WALK).unwrap();
    let out = run(&cfg, &["--threads", "0", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn model_files_resolve_next_to_config() {
    let dir = scratch("model");
    fs::create_dir_all(dir.join("models")).unwrap();
    fs::write(
        dir.join("models/m.json"),
        r#"{"kind": "flat", "walls": [-1.0, 0.0, 1.0], "heights": [1.0],
            "restitution": [{"kind": "constant", "c": 1.0}, {"kind": "constant", "c": 1.0}, {"kind": "constant", "c": 1.0}]}"#,
    )
    .unwrap();
    let cfg = dir.join("avg.json");
    fs::write(
        &cfg,
        r#"{"seed": 1, "eps": [0.01], "experiment": {"kind": "averaging-1d", "model": {"path": "models/m.json"}, "x0": [0.5, 2.0]}}"#,
    )
    .unwrap();
    let out = run(&cfg, &["--out", dir.join("out").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out/energy_path_eps1e-2.csv").exists());

    fs::remove_file(dir.join("models/m.json")).unwrap();
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("models/m.json"));
}
