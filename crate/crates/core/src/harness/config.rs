use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{RbError, Result};
use crate::estimators::{AlphaMode, EstimatorKind, DEFAULT_ALPHA_FLOOR};
use crate::numerics::DEFAULT_RANK_TOL;
use crate::rbm::DEFAULT_SNAPSHOT_DROP_TOL;
use crate::truth::{ProblemKind, ProblemSpec};

/// Environment variable that replaces `output.dir` when set.
pub const OUTPUT_DIR_ENV: &str = "RBM_OUTPUT_DIR";

/// Size presets for the experiment defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `𝒩_x = 32`, reduced 2-parameter grids; minutes on one core.
    Desk,
    /// `𝒩_x = 50` with the full-size training grids.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    pub truth: TruthSection,
    pub greedy: GreedySection,
    #[serde(default)]
    pub validation: ValidationSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub nodes_per_dim: usize,
    /// Value of `sign(0)` for the discontinuous coefficient.
    #[serde(default = "one_f64")]
    pub sign_at_zero: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreedySection {
    pub eps_tol: f64,
    pub n_max: usize,
    /// Points per parameter dimension.
    pub training_grid: Vec<usize>,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
    #[serde(default = "default_alpha_floor")]
    pub alpha_floor: f64,
    #[serde(default = "default_drop_tol")]
    pub drop_tol: f64,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    #[serde(default)]
    pub enabled: bool,
    /// Per-dimension counts; the training grid when absent.
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
    /// Basis sizes at which estimate and true-error fields are written.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Basis sizes at which Lagrange traces are written (1-parameter
    /// problems only).
    #[serde(default)]
    pub lagrange_checkpoints: Vec<usize>,
}

fn one() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn default_alpha_floor() -> f64 {
    DEFAULT_ALPHA_FLOOR
}
fn default_drop_tol() -> f64 {
    DEFAULT_SNAPSHOT_DROP_TOL
}
fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}

impl ExperimentConfig {
    /// Defaults for `problem` at the given size preset.
    pub fn preset(problem: ProblemKind, estimator: EstimatorKind, profile: Profile) -> Self {
        let (nodes_per_dim, training_grid) = match (profile, problem) {
            (_, ProblemKind::OnedContinuous | ProblemKind::OnedDiscontinuous) => {
                (if profile == Profile::Desk { 32 } else { 50 }, vec![512])
            }
            (Profile::Desk, ProblemKind::TwodFirst) => (32, vec![65, 33]),
            (Profile::Desk, ProblemKind::TwodSecond) => (32, vec![80, 80]),
            (Profile::Full, ProblemKind::TwodFirst) => (50, vec![129, 65]),
            (Profile::Full, ProblemKind::TwodSecond) => (50, vec![160, 160]),
        };
        ExperimentConfig {
            problem,
            estimator,
            seed: 0,
            workers: 1,
            truth: TruthSection { nodes_per_dim, sign_at_zero: 1.0 },
            greedy: GreedySection {
                eps_tol: 1e-14,
                n_max: 40,
                training_grid,
                alpha_mode: AlphaMode::Unit,
                alpha_floor: DEFAULT_ALPHA_FLOOR,
                drop_tol: DEFAULT_SNAPSHOT_DROP_TOL,
                rank_tol: DEFAULT_RANK_TOL,
            },
            validation: ValidationSection::default(),
            output: OutputSection { dir: PathBuf::from(format!("runs/{problem}-{estimator}")), lagrange_checkpoints: vec![] },
        }
    }

    pub fn desk(problem: ProblemKind, estimator: EstimatorKind) -> Self {
        Self::preset(problem, estimator, Profile::Desk)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| RbError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RbError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            RbError::Config(msg) => RbError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| RbError::Config(e.to_string()))
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec::new(self.problem).with_sign_at_zero(self.truth.sign_at_zero)
    }

    pub fn validation_grid(&self) -> &[usize] {
        self.validation.grid.as_deref().unwrap_or(&self.greedy.training_grid)
    }

    /// `output.dir`, unless overridden by the environment.
    pub fn resolved_output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.output.dir.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RbError::Config(msg));
        let p = self.problem.param_dim();
        if self.truth.nodes_per_dim < 3 {
            return bad(format!("truth.nodes_per_dim must be at least 3, got {}", self.truth.nodes_per_dim));
        }
        if !(self.greedy.eps_tol > 0.0) {
            return bad(format!("greedy.eps_tol must be positive, got {}", self.greedy.eps_tol));
        }
        if self.greedy.n_max == 0 {
            return bad("greedy.n_max must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        for (name, grid) in [("greedy.training_grid", &self.greedy.training_grid), ("validation.grid", &self.validation_grid().to_vec())] {
            if grid.len() != p {
                return bad(format!("{name} needs {p} counts for {}, got {}", self.problem, grid.len()));
            }
            if grid.iter().any(|&c| c < 2) {
                return bad(format!("{name} counts must be at least 2, got {grid:?}"));
            }
        }
        for (name, tol) in [
            ("greedy.alpha_floor", self.greedy.alpha_floor),
            ("greedy.drop_tol", self.greedy.drop_tol),
            ("greedy.rank_tol", self.greedy.rank_tol),
        ] {
            if !(tol > 0.0 && tol < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {tol}"));
            }
        }
        if !self.validation.enabled && !self.validation.checkpoints.is_empty() {
            return bad("validation.checkpoints require validation.enabled = true".into());
        }
        if self.validation.checkpoints.iter().chain(&self.output.lagrange_checkpoints).any(|&k| k == 0) {
            return bad("checkpoints must be at least 1".into());
        }
        if p != 1 && !self.output.lagrange_checkpoints.is_empty() {
            return bad("output.lagrange_checkpoints is only available for 1-parameter problems".into());
        }
        Ok(())
    }
}
