// A complete experiment from a TOML configuration: greedy run, validation,
// and the CSV/JSON artifacts written to the output directory.

use rbm_core::harness::{read_csv, run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
problem = "oned-continuous"
estimator = "stable"
seed = 3

[truth]
nodes_per_dim = 16

[greedy]
eps_tol = 1e-12
n_max = 8
training_grid = [64]

[validation]
enabled = true
checkpoints = [4]

[output]
dir = "unused"
lagrange_checkpoints = [4]
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::from_toml_str(CONFIG)?;
    config.output.dir = std::env::temp_dir().join(format!("rbm-example-{}", std::process::id()));
    let out = run_experiment(&config)?;
    println!("wrote {} ({})", out.dir.display(), out.history.termination.label());
    let (header, rows) = read_csv(&out.history_path)?;
    println!("{}", header.join(" | "));
    for row in &rows {
        println!("{}", row.join(" | "));
    }
    for path in out.field_paths.iter().chain(&out.lagrange_paths) {
        println!("{}: {} rows", path.display(), read_csv(path)?.1.len());
    }
    std::fs::remove_dir_all(&out.dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
