use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
problem = "twod-first"
estimator = "stable"

[truth]
nodes_per_dim = 12

[greedy]
eps_tol = 1e-12
n_max = 4
training_grid = [7, 5]

[output]
dir = "from-config"
"#;

fn rbm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbm"))
        .args(args)
        .current_dir(dir)
        .env_remove("RBM_OUTPUT_DIR")
        .output()
        .unwrap()
}

#[test]
fn run_applies_overrides_and_validate_reads_the_result() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    let out = rbm(
        dir.path(),
        &["run", "c.toml", "--n-max", "3", "--estimator", "lebesgue", "--alpha-mode", "exact-eig", "--output-dir", "o"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let history = fs::read_to_string(dir.path().join("o/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    let meta = fs::read_to_string(dir.path().join("o/metadata.json")).unwrap();
    assert!(meta.contains(r#"estimator = \"lebesgue\""#));

    let out = rbm(dir.path(), &["validate", "o", "--grid", "4,3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("o/validation.csv")).unwrap().lines().count(), 13);
}

#[test]
fn environment_overrides_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_rbm"))
        .args(["run", "c.toml"])
        .current_dir(dir.path())
        .env("RBM_OUTPUT_DIR", "env-dir")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("env-dir/history.csv").exists());
    assert!(!dir.path().join("from-config").exists());
}

#[test]
fn float_demo_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = rbm(dir.path(), &["float-demo", "--n-min", "18", "--n-max", "22", "--samples", "50", "--output", "fd.csv"]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("fd.csv")).unwrap().lines().count(), 6);
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    fs::write(dir.path().join("bad.toml"), CONFIG.replace("n_max = 4", "n_max = 4\nnmax = 2")).unwrap();
    let code = |args: &[&str]| rbm(dir.path(), args).status.code();
    assert_eq!(code(&["run", "missing.toml"]), Some(3));
    assert_eq!(code(&["run", "bad.toml"]), Some(2));
    assert_eq!(code(&["run", "c.toml", "--training-grid", "7"]), Some(2));
    assert_eq!(code(&["float-demo", "--n-min", "5", "--n-max", "2"]), Some(2));
    assert_eq!(code(&["validate", "nowhere"]), Some(3));
}
