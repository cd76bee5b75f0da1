use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bcaplab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcaplab"))
        .args(args)
        .current_dir(dir)
        .env_remove("BCAPLAB_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

#[test]
fn experiment_writes_csv_sidecar_and_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bcaplab(&["experiment", "spine-fraction", "--samples", "300", "--seed", "4", "--output-dir", "runs"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = tmp.path().join("runs");
    assert_eq!(
        files(&runs),
        ["spine-fraction-seed4.csv", "spine-fraction-seed4.json", "spine-fraction-seed4.schema.txt"]
    );
    let csv = fs::read_to_string(runs.join("spine-fraction-seed4.csv")).unwrap();
    assert!(csv.starts_with("n,r,samples,exceed,frequency,stderr\n"));
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(runs.join("spine-fraction-seed4.json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"], 4);
    assert_eq!(sidecar["config"]["samples"], 300);
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    for workers in ["1", "3"] {
        let args = [
            "experiment", "intersection", "--n-grid", "100", "--trials", "500", "--workers", workers, "--output-dir", workers,
        ];
        let out = bcaplab(&args, tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |w: &str| fs::read(tmp.path().join(w).join("intersection-seed1.csv")).unwrap();
    assert_eq!(read("1"), read("3"));
}

#[test]
fn config_file_and_flags_merge() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), "seed = 9\nsamples = 50\nn_grid = [10, 20]\n").unwrap();
    let out = bcaplab(&["experiment", "spine-fraction", "--config", "run.toml", "--samples", "70", "--dry-run"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 9") && text.contains("samples = 70") && text.contains("n_grid = [10, 20]"), "{text}");
    // A dry run writes nothing.
    assert_eq!(files(tmp.path()), ["run.toml"]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bcaplab(args, tmp.path()).status.code();
    assert_eq!(code(&["version"]), Some(0));
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert_eq!(code(&["sample-tree", "--conditioned", "4"]), Some(2));
    assert_eq!(code(&["experiment", "spine-fraction", "--mu", "table([0.5,0.5])"]), Some(2));
    fs::write(tmp.path().join("bad.toml"), "colour = 1\n").unwrap();
    assert_eq!(code(&["experiment", "identities", "--config", "bad.toml"]), Some(2));
    fs::write(tmp.path().join("pts.csv"), "0,0\n1,0\n0,1\n").unwrap();
    assert_eq!(code(&["estimate", "--method", "riesz", "--gamma", "3", "--points", "pts.csv", "--out", "r.json"]), Some(2));
}

#[test]
fn sample_tree_and_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bcaplab(&["sample-tree", "--conditioned", "9", "--count", "3", "--out", "trees.txt"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("trees.txt")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.starts_with("9;")));

    fs::write(tmp.path().join("pts.csv"), "0,0,0\n2,0,0\n0,2,0\n").unwrap();
    let out = bcaplab(&["estimate", "--method", "riesz", "--gamma", "1", "--points", "pts.csv", "--out", "r.json"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("r.json")).unwrap()).unwrap();
    assert!(sol["capacity"].as_f64().unwrap() > 0.0);
    assert_eq!(sol["weights"].as_array().unwrap().len(), 3);
}
