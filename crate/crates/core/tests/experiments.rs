use std::fs;
use std::path::PathBuf;

use eignet_core::experiments::{run, Experiment, ExperimentConfig, NodeSpec, VERSION};

fn scratch_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("eignet-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

fn write_run(config: &ExperimentConfig, tag: &str) -> PathBuf {
    let dir = scratch_dir(tag);
    run(config).unwrap().write(&dir).unwrap();
    dir
}

#[test]
fn reruns_are_byte_identical() {
    for exp in [Experiment::QuadBuild, Experiment::Density, Experiment::LocalRecovery] {
        let mut c = ExperimentConfig::new(exp);
        c.seed = 7;
        c.seeds = Some(3);
        if exp == Experiment::QuadBuild {
            c.seeds = None;
            c.nodes = Some(NodeSpec::Random(300));
        }
        let (a, b) = (write_run(&c, &format!("{exp}-a")), write_run(&c, &format!("{exp}-b")));
        for file in fs::read_dir(&a).unwrap() {
            let name = file.unwrap().file_name();
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
        }
        let _ = (fs::remove_dir_all(a), fs::remove_dir_all(b));
    }
}

#[test]
fn summary_records_provenance() {
    let mut c = ExperimentConfig::new(Experiment::ApproxRate);
    c.out = Some(PathBuf::from("elsewhere"));
    let dir = write_run(&c, "summary");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("approx_rate.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"], c.hash());
    assert_eq!(json["version"], VERSION);
    assert_eq!(json["experiment"], "approx_rate");
    assert!(json["fitted"]["slope"].is_number());
    let csv = fs::read_to_string(dir.join("approx_rate.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,sup_error"));
    assert_eq!(csv.lines().count(), 5);
    let _ = fs::remove_dir_all(dir);
}

#[test]
fn output_directory_does_not_change_the_hash() {
    let mut a = ExperimentConfig::new(Experiment::Covering);
    let mut b = a.clone();
    a.out = Some(PathBuf::from("x"));
    b.out = Some(PathBuf::from("y"));
    assert_eq!(a.hash(), b.hash());
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
}
