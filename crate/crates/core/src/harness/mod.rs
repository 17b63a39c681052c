//! Experiment orchestration: configuration files, training grids, greedy
//! runs with optional validation, and CSV/JSON artifacts.

mod config;
mod grid;
mod output;
mod run;

pub use config::{
    ExperimentConfig, GreedySection, OutputSection, Profile, TruthSection, ValidationSection, OUTPUT_DIR_ENV,
};
pub use grid::make_training_grid;
pub use output::{fmt_f64, fmt_opt, read_csv, write_csv};
pub use run::{run_experiment, run_float_demo, validate, validate_saved_run, Experiment, RunArtifacts, TruthCache};
