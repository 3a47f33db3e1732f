use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("eignet-cli-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn eignet(args: &[&str], out: &PathBuf) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eignet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = scratch_dir("run");
    let o = eignet(&["run", "mehler"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("pass:"));
    assert!(dir.join("mehler.csv").exists());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("mehler.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn usage_errors_exit_2() {
    let dir = scratch_dir("usage");
    for args in [
        &["run", "no_such_experiment"][..],
        &["run", "reproduction", "--system", "klein"],
        &["quad", "build", "--order", "16", "--nodes", "random"],
        &["quad", "build"],
    ] {
        let o = eignet(args, &dir);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"not_a_field": 1}"#).unwrap();
    let o = eignet(&["run", "covering", "--config", bad.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn insufficient_nodes_exit_1() {
    let dir = scratch_dir("nodes");
    let o = eignet(&["quad", "build", "--order", "16", "--nodes", "random:20"], &dir);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nodes insufficient for order 16"));
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn failed_check_exits_1() {
    let dir = scratch_dir("check");
    // Far too few points for the covering budget at this accuracy.
    let o = eignet(&["run", "covering", "--sizes", "3"], &dir);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL:"));
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn quad_build_writes_rule_and_sidecar() {
    let dir = scratch_dir("quad");
    let o = eignet(&["quad", "build", "--system", "torus:1", "--order", "16", "--nodes", "random:400", "--seed", "7"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.join("quad_build.csv")).unwrap();
    assert_eq!(csv.lines().count(), 401);
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("quad_build.sidecar.json")).unwrap()).unwrap();
    assert_eq!(side["order"], 16.0);
    assert_eq!(side["seed"], 7);
    assert!(side["residual"].as_f64().unwrap() <= 1e-8);
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn config_file_overrides_flags() {
    let dir = scratch_dir("config");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"scales": [8, 16]}"#).unwrap();
    let o = eignet(&["run", "approx_rate", "--scales", "8,16,32,64", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.join("approx_rate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let _ = fs::remove_dir_all(dir);
}
