use std::fs;
use std::process::{Command, Output};

fn bqpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqpt")).args(args).output().expect("binary runs")
}

#[test]
fn empty_size_list_is_usage_error() {
    let out = bqpt(&["sweep", "--L", ""]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("L list is empty"));
}

#[test]
fn malformed_flags_are_usage_errors() {
    assert_eq!(bqpt(&["sweep", "--epsilon", "0:1"]).status.code(), Some(2));
    assert_eq!(bqpt(&["sweep", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(bqpt(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_header_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = bqpt(&["sweep", "--epsilon", "0.5:1.5:3", "--L", "10,1e12", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("# config-hash: sha256:"));
    assert!(text.contains("# convention: quadrature x = a + a^dagger"));
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("epsilon,L,lambda,E0,E0_density,gap,n_mean,rho,delta_x,overlap,n_max_used,converged"));
    assert_eq!(body.len(), 7);
    // the critical row at L = 1e12 converges well below 100 levels
    let crit: Vec<&str> = body[5].split(',').collect();
    assert_eq!((crit[0], crit[1]), ("1e0", "1e12"));
    assert!(crit[10].parse::<usize>().unwrap() < 100);
    assert_eq!(crit[11], "true");
    assert!(fs::read_to_string(dir.path().join("s.csv.log")).unwrap().contains("started unix="));
}

#[test]
fn failed_points_keep_the_sweep_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out =
        bqpt(&["sweep", "--epsilon", "0.5:1.5:3", "--L", "10", "--n-max-cap", "16", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.contains("n_max cap")));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "epsilon = 0.2:0.4:3\nL = 1e3\nL = 1e4\nformat = json\n").unwrap();
    let path = dir.path().join("s.json");
    let out = bqpt(&["sweep", "--config", cfg.to_str().unwrap(), "--L", "50", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["config"]["L"], "5e1");
    let rows = v["tables"]["sweep"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], 50.0);
}

#[test]
fn noiseless_positive_p_has_energy_column() {
    let out = bqpt(&["positive-p", "--no-noise", "--alpha0", "1", "--t-final", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("t,mean,energy,energy_drift"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
}

#[test]
fn inconsistent_step_is_usage_error() {
    let out = bqpt(&["positive-p", "--dt", "0.3", "--sample-interval", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn self_test_passes() {
    let out = bqpt(&["self-test"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains(",false"));
}
