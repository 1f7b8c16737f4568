use std::path::Path;
use std::process::{Command, Output};

use crn_phase::io::read_csv;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crn-phase"))
        .current_dir(dir)
        .env_remove("CRN_PHASE_WORKERS")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn limit_cycle_csv_records_the_period() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["limit-cycle", "--omega", "1", "--out", "lc"]);
    let t = read_csv(&dir.path().join("lc/limit_cycle.csv")).unwrap();
    let period: f64 = t.meta("period").unwrap().parse().unwrap();
    assert!((period - 6.577284341910615).abs() < 1e-6);
    assert_eq!(t.header, ["theta", "X", "Y", "dX", "dY"]);
    assert!(t.meta("config_hash").unwrap().len() == 64);
    let theta = t.column("theta").unwrap();
    assert_eq!(theta[0], 0.0);
    assert!(theta.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn phase_with_zero_horizon_has_one_record() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["phase", "--t-end", "0", "--out", "p.csv"]);
    let t = read_csv(&dir.path().join("p.csv")).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.column("t").unwrap(), vec![0.0]);
    assert!(t.column("norm_w").unwrap()[0] < 0.05);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let esc = ["escape", "--omega-list", "100,200", "--zeta-list", "2", "--horizon", "2", "--replicas", "64", "--seed", "5"];
    let with = |out: &str, workers: &str| {
        let mut a: Vec<&str> = esc.to_vec();
        a.extend(["--out", out, "--workers", workers]);
        ok(dir.path(), &a);
    };
    with("a", "1");
    with("b", "1");
    with("c", "3");
    for f in ["summary.csv", "escape_omega100_zeta2.json", "escape_omega200_zeta2.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
        assert_eq!(a, std::fs::read(dir.path().join("c").join(f)).unwrap(), "{f}");
    }
    ok(dir.path(), &["simulate", "--omega", "200", "--t-end", "3", "--sample-dt", "0.1", "--out", "s1.csv"]);
    ok(dir.path(), &["simulate", "--omega", "200", "--t-end", "3", "--sample-dt", "0.1", "--out", "s2.csv", "--workers", "2"]);
    assert_eq!(std::fs::read(dir.path().join("s1.csv")).unwrap(), std::fs::read(dir.path().join("s2.csv")).unwrap());
    ok(dir.path(), &["simulate", "--omega", "200", "--t-end", "3", "--sample-dt", "0.1", "--out", "s3.csv", "--seed", "1"]);
    assert_ne!(std::fs::read(dir.path().join("s1.csv")).unwrap(), std::fs::read(dir.path().join("s3.csv")).unwrap());
}

#[test]
fn config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "omega = 1.0\nseed = 3\n[tolerances]\ngrid_size = 128\n").unwrap();
    ok(dir.path(), &["--config", "run.toml", "prc", "--out", "prc.csv"]);
    let t = read_csv(&dir.path().join("prc.csv")).unwrap();
    assert_eq!(t.rows.len(), 128);
    assert_eq!(t.meta("seed"), Some("3"));
    assert_eq!(t.header, ["theta", "R_X", "R_Y"]);

    std::fs::write(dir.path().join("bad.toml"), "omgea = 1.0\n").unwrap();
    let out = run(dir.path(), &["--config", "bad.toml", "limit-cycle"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[config]"), "{err}");
    assert!(err.contains("omgea"), "{err}");

    let out = run(dir.path(), &["limit-cycle", "--model", "missing.crn"]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(dir.path().join("bad.crn"), "1.0 : X + -> Y\n").unwrap();
    let out = run(dir.path(), &["limit-cycle", "--model", "bad.crn"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.crn") || !out.stderr.is_empty());
}

#[test]
fn floquet_json_and_shipped_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = Path::new(env!("CARGO_MANIFEST_DIR")).join("models/brusselator.crn");
    ok(dir.path(), &["floquet", "--model", model.to_str().unwrap(), "--omega", "1", "--out", "f"]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("f/floquet.json")).unwrap()).unwrap();
    assert!(v["metadata"]["config.model"].as_str().unwrap().ends_with("brusselator.crn"));
    assert!(v["data"].is_object());
}
