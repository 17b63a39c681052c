use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::grid::make_training_grid;
use super::output::{fmt_f64, fmt_opt, numbered, read_csv, write_csv};
use crate::error::{RbError, Result};
use crate::estimators::{coercivity_lower_bound, float_demo, AlphaMode, Estimator, EstimatorState, FloatDemoRow};
use crate::numerics::GramSpec;
use crate::rbm::{
    extend_basis, greedy, lagrange_coefficients, rb_solve, reconstruct, GreedyConfig, GreedyHistory, ReducedBasis,
    ReducedModel, Termination,
};
use crate::truth::{assemble_affine, truth_solve, AffineOperator, ParamPoint, ProblemSpec, TruthDiscretization};

/// Assembled problem and training set for one configuration.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: ProblemSpec,
    pub disc: TruthDiscretization,
    pub op: AffineOperator,
    pub training: Vec<ParamPoint>,
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.problem_spec();
        let disc = TruthDiscretization::new(config.truth.nodes_per_dim)?;
        let op = assemble_affine(&spec, &disc)?;
        let training = make_training_grid(&spec.param_domain, &config.greedy.training_grid)?;
        Ok(Experiment { config: config.clone(), spec, disc, op, training })
    }

    pub fn gram(&self) -> &GramSpec {
        &self.disc.gram
    }

    pub fn greedy_config(&self) -> GreedyConfig {
        let g = &self.config.greedy;
        GreedyConfig {
            eps_tol: g.eps_tol,
            n_max: g.n_max,
            training_set: self.training.clone(),
            estimator: self.config.estimator,
            seed: self.config.seed,
            alpha_mode: g.alpha_mode,
            alpha_floor: g.alpha_floor,
            workers: self.config.workers,
            drop_tol: g.drop_tol,
            rank_tol: g.rank_tol,
        }
    }

    /// Fresh estimator state for the configured kind and tolerances.
    pub fn estimator(&self) -> Result<EstimatorState> {
        let g = &self.config.greedy;
        EstimatorState::new(self.config.estimator, &self.op, self.gram(), g.rank_tol, g.drop_tol)
    }

    pub fn validation_points(&self) -> Result<Vec<ParamPoint>> {
        make_training_grid(&self.spec.param_domain, self.config.validation_grid())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        worker_pool(self.config.workers)
    }
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RbError::invalid(format!("cannot build worker pool: {e}")))
}

/// Truth solutions over a point set, computed once and reused for every
/// basis size. A point whose truth solve fails is kept as `None`.
pub struct TruthCache {
    pub points: Vec<ParamPoint>,
    pub solutions: Vec<Option<DVector<f64>>>,
}

impl TruthCache {
    pub fn solve(op: &AffineOperator, points: &[ParamPoint], workers: usize) -> Result<Self> {
        let solutions = worker_pool(workers)?
            .install(|| points.par_iter().map(|mu| truth_solve(op, mu).ok().map(|s| s.values)).collect());
        Ok(TruthCache { points: points.to_vec(), solutions })
    }

    /// True error of the reduced solution at every cached point; `None` where
    /// either solve failed.
    pub fn errors(
        &self,
        basis: &ReducedBasis,
        model: &ReducedModel,
        op: &AffineOperator,
        gram: &GramSpec,
        workers: usize,
    ) -> Result<Vec<Option<f64>>> {
        let pool = worker_pool(workers)?;
        Ok(pool.install(|| {
            self.points
                .par_iter()
                .zip(&self.solutions)
                .map(|(mu, truth)| {
                    let truth = truth.as_ref()?;
                    let u_hat = rb_solve(model, op, mu).ok()?;
                    let u_n = reconstruct(basis, &u_hat).ok()?;
                    Some(gram.norm(&(truth - u_n)))
                })
                .collect()
        }))
    }
}

/// True error `‖u(μ) − u_N(μ)‖_X` at each point, in input order.
pub fn validate(
    basis: &ReducedBasis,
    model: &ReducedModel,
    op: &AffineOperator,
    points: &[ParamPoint],
    gram: &GramSpec,
    workers: usize,
) -> Result<Vec<(ParamPoint, Option<f64>)>> {
    if let Some(bad) = points.iter().find(|p| p.len() != op.param_dim()) {
        return Err(RbError::invalid(format!("validation point {bad} has the wrong dimension")));
    }
    let cache = TruthCache::solve(op, points, workers)?;
    let errors = cache.errors(basis, model, op, gram, workers)?;
    Ok(points.iter().cloned().zip(errors).collect())
}

/// Files and in-memory results of one experiment.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub history_path: PathBuf,
    pub snapshots_path: PathBuf,
    pub field_paths: Vec<PathBuf>,
    pub lagrange_paths: Vec<PathBuf>,
    pub metadata_path: PathBuf,
    pub history: GreedyHistory,
    /// Max true error over the validation grid for each history row.
    pub max_true_errors: Option<Vec<Option<f64>>>,
    pub final_n: usize,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Timings {
    assembly: f64,
    greedy: f64,
    validation: f64,
    artifacts: f64,
    total: f64,
    sweeps: Vec<f64>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    format_version: u32,
    crate_version: &'a str,
    config_toml: String,
    output_dir: String,
    problem: String,
    truth_dim: usize,
    training_points: usize,
    final_n: usize,
    initial_index: Option<usize>,
    termination: Option<String>,
    files: Vec<String>,
    warnings: &'a [String],
    error: Option<String>,
    timings: Timings,
}

/// Runs the greedy for `config` and writes every artifact into the output
/// directory.
///
/// Numeric files depend only on the configuration (never on wall time or
/// the worker count); timings go to `metadata.json` only.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let started = Instant::now();
    let dir = config.resolved_output_dir();
    fs::create_dir_all(&dir).map_err(|e| RbError::io(&dir, e))?;
    let metadata_path = dir.join("metadata.json");

    let exp = Experiment::new(config)?;
    let assembly = started.elapsed().as_secs_f64();

    let greedy_started = Instant::now();
    let outcome = match exp.estimator().and_then(|est| greedy(&exp.greedy_config(), &exp.op, exp.gram(), est)) {
        Ok(o) => o,
        Err(e) => {
            let meta = Metadata {
                format_version: 1,
                crate_version: env!("CARGO_PKG_VERSION"),
                config_toml: config.to_toml_string()?,
                output_dir: dir.display().to_string(),
                problem: config.problem.to_string(),
                truth_dim: exp.op.dim(),
                training_points: exp.training.len(),
                final_n: 0,
                initial_index: None,
                termination: None,
                files: vec![],
                warnings: &[],
                error: Some(e.to_string()),
                timings: Timings {
                    assembly,
                    greedy: greedy_started.elapsed().as_secs_f64(),
                    validation: 0.0,
                    artifacts: 0.0,
                    total: started.elapsed().as_secs_f64(),
                    sweeps: vec![],
                },
            };
            write_json(&metadata_path, &meta)?;
            return Err(e);
        }
    };
    let greedy_time = greedy_started.elapsed().as_secs_f64();
    let basis = &outcome.basis;
    let model = &outcome.model;
    let history = &outcome.history;
    let mut warnings = Vec::new();

    let validation_started = Instant::now();
    let (max_true_errors, cache) = if config.validation.enabled {
        let points = exp.validation_points()?;
        let cache = TruthCache::solve(&exp.op, &points, config.workers)?;
        let failed = cache.solutions.iter().filter(|s| s.is_none()).count();
        if failed > 0 {
            warnings.push(format!("{failed} validation truth solves failed and are reported as missing"));
        }
        let mut per_row = Vec::with_capacity(history.records.len());
        for record in &history.records {
            let errs = cache.errors(&basis.truncated(record.n), &model.truncated(record.n), &exp.op, exp.gram(), config.workers)?;
            per_row.push(errs.into_iter().flatten().reduce(f64::max));
        }
        (Some(per_row), Some(cache))
    } else {
        (None, None)
    };
    let validation_time = validation_started.elapsed().as_secs_f64();

    let artifacts_started = Instant::now();
    let p = exp.spec.param_dim();
    let history_path = dir.join("history.csv");
    write_history(&history_path, history, p, max_true_errors.as_deref())?;

    let snapshots_path = dir.join("snapshots.csv");
    let mut header = vec!["order".to_string(), "index".to_string()];
    header.extend(numbered("mu", p));
    let rows = history.selected_indices().into_iter().enumerate().map(|(order, index)| {
        let mut row = vec![(order + 1).to_string(), index.to_string()];
        row.extend(exp.training[index].iter().map(|&c| fmt_f64(c)));
        row
    });
    write_csv(&snapshots_path, &header, rows)?;

    let mut field_paths = Vec::new();
    if let Some(cache) = &cache {
        for &k in &config.validation.checkpoints {
            if k > basis.len() {
                warnings.push(format!("field checkpoint N = {k} skipped: final basis has {} vectors", basis.len()));
                continue;
            }
            let path = dir.join(format!("field_N{k}.csv"));
            write_field(&path, &exp, basis, model, cache, k)?;
            field_paths.push(path);
        }
    }

    let mut lagrange_paths = Vec::new();
    for &k in &config.output.lagrange_checkpoints {
        if k > basis.len() {
            warnings.push(format!("Lagrange checkpoint N = {k} skipped: final basis has {} vectors", basis.len()));
            continue;
        }
        let path = dir.join(format!("lagrange_N{k}.csv"));
        if write_lagrange(&path, &exp, basis, model, k)? {
            warnings.push(format!("Lagrange coefficients at N = {k} are ill-conditioned"));
        }
        lagrange_paths.push(path);
    }
    let artifacts_time = artifacts_started.elapsed().as_secs_f64();

    let mut files = vec!["history.csv".to_string(), "snapshots.csv".to_string()];
    files.extend(field_paths.iter().chain(&lagrange_paths).filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()));
    let meta = Metadata {
        format_version: 1,
        crate_version: env!("CARGO_PKG_VERSION"),
        config_toml: config.to_toml_string()?,
        output_dir: dir.display().to_string(),
        problem: config.problem.to_string(),
        truth_dim: exp.op.dim(),
        training_points: exp.training.len(),
        final_n: basis.len(),
        initial_index: Some(history.initial_index),
        termination: Some(history.termination.label()),
        files,
        warnings: &warnings,
        error: match &history.termination {
            Termination::Failed(msg) => Some(msg.clone()),
            _ => None,
        },
        timings: Timings {
            assembly,
            greedy: greedy_time,
            validation: validation_time,
            artifacts: artifacts_time,
            total: started.elapsed().as_secs_f64(),
            sweeps: history.records.iter().map(|r| r.wall_time).collect(),
        },
    };
    write_json(&metadata_path, &meta)?;

    Ok(RunArtifacts {
        dir,
        history_path,
        snapshots_path,
        field_paths,
        lagrange_paths,
        metadata_path,
        history: outcome.history.clone(),
        max_true_errors,
        final_n: basis.len(),
        warnings,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| RbError::invalid(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| RbError::io(path, e))
}

fn write_history(path: &Path, history: &GreedyHistory, p: usize, max_errors: Option<&[Option<f64>]>) -> Result<()> {
    let mut header = vec!["n".to_string(), "index".to_string()];
    header.extend(numbered("mu", p));
    header.extend(["estimate", "clamped", "true_error_argmax"].map(String::from));
    if max_errors.is_some() {
        header.push("max_true_error".into());
    }
    header.push("extended".into());
    let rows = history.records.iter().enumerate().map(|(i, r)| {
        let mut row = vec![r.n.to_string(), r.index.to_string()];
        row.extend(r.mu.iter().map(|&c| fmt_f64(c)));
        row.push(fmt_f64(r.estimate));
        row.push(u8::from(r.clamped).to_string());
        row.push(fmt_opt(r.true_error_at_argmax));
        if let Some(m) = max_errors {
            row.push(fmt_opt(m[i]));
        }
        row.push(u8::from(r.extended).to_string());
        row
    });
    write_csv(path, &header, rows)
}

/// Estimate and true error over the validation grid for the first `k` basis
/// vectors. The estimator is rebuilt for the truncated basis.
fn write_field(
    path: &Path,
    exp: &Experiment,
    basis: &ReducedBasis,
    model: &ReducedModel,
    cache: &TruthCache,
    k: usize,
) -> Result<()> {
    let basis_k = basis.truncated(k);
    let model_k = model.truncated(k);
    let mut estimator = exp.estimator()?;
    estimator.update(&exp.op, &basis_k)?;
    let errors = cache.errors(&basis_k, &model_k, &exp.op, exp.gram(), exp.config.workers)?;
    let g = &exp.config.greedy;
    let estimates: Vec<Option<f64>> = exp.pool()?.install(|| {
        cache
            .points
            .par_iter()
            .map(|mu| {
                let alpha = match g.alpha_mode {
                    AlphaMode::Unit => 1.0,
                    mode => coercivity_lower_bound(&exp.op, mu, mode, exp.gram(), g.alpha_floor).ok()?.value,
                };
                let u_hat = rb_solve(&model_k, &exp.op, mu).ok()?;
                estimator.evaluate(&exp.op, &basis_k, mu, &u_hat, alpha).ok().map(|e| e.value)
            })
            .collect()
    });
    let p = exp.spec.param_dim();
    let mut header = numbered("mu", p);
    header.extend(["estimate", "true_error"].map(String::from));
    let rows = cache.points.iter().zip(estimates.iter().zip(&errors)).map(|(mu, (e, t))| {
        let mut row: Vec<String> = mu.iter().map(|&c| fmt_f64(c)).collect();
        row.push(fmt_opt(*e));
        row.push(fmt_opt(*t));
        row
    });
    write_csv(path, &header, rows)
}

/// Lagrange coefficients `c_m(μ)` over the training grid. Returns whether
/// the change of basis was flagged ill-conditioned.
fn write_lagrange(path: &Path, exp: &Experiment, basis: &ReducedBasis, model: &ReducedModel, k: usize) -> Result<bool> {
    let basis_k = basis.truncated(k);
    let model_k = model.truncated(k);
    let mut header = numbered("mu", exp.spec.param_dim());
    header.extend(numbered("c", k));
    header.push("lebesgue".into());
    let mut ill = false;
    let mut rows = Vec::with_capacity(exp.training.len());
    for mu in &exp.training {
        let mut row: Vec<String> = mu.iter().map(|&c| fmt_f64(c)).collect();
        match rb_solve(&model_k, &exp.op, mu).and_then(|u| lagrange_coefficients(&basis_k, &u)) {
            Ok(c) => {
                ill |= c.ill_conditioned;
                row.extend(c.values.iter().map(|&v| fmt_f64(v)));
                row.push(fmt_f64(c.values.lp_norm(1)));
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), k + 1)),
        }
        rows.push(row);
    }
    write_csv(path, &header, rows)?;
    Ok(ill)
}

/// Re-validates a finished run: rebuilds the basis from its recorded
/// snapshot locations and writes `validation.csv` over `grid` (the
/// configured validation grid when `None`). Returns the file path and the
/// maximum error.
pub fn validate_saved_run(run_dir: &Path, grid: Option<Vec<usize>>, workers: usize) -> Result<(PathBuf, Option<f64>)> {
    let meta_path = run_dir.join("metadata.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| RbError::io(&meta_path, e))?;
    let meta: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| RbError::Format { path: meta_path.clone(), reason: e.to_string() })?;
    let config_toml = meta["config_toml"]
        .as_str()
        .ok_or_else(|| RbError::Format { path: meta_path.clone(), reason: "missing config_toml".into() })?;
    let mut config = ExperimentConfig::from_toml_str(config_toml)?;
    if let Some(g) = grid {
        config.validation.grid = Some(g);
    }
    config.workers = workers;
    config.validate()?;
    let exp = Experiment::new(&config)?;

    let snap_path = run_dir.join("snapshots.csv");
    let (_, rows) = read_csv(&snap_path)?;
    let mut basis = ReducedBasis::new(exp.gram().clone(), config.greedy.drop_tol);
    let mut model = ReducedModel::new(&exp.op);
    for row in rows {
        let index: usize = row[1]
            .parse()
            .ok()
            .filter(|&i| i < exp.training.len())
            .ok_or_else(|| RbError::Format { path: snap_path.clone(), reason: format!("bad training index '{}'", row[1]) })?;
        let snapshot = truth_solve(&exp.op, &exp.training[index])?;
        extend_basis(&mut basis, &mut model, snapshot, &exp.op)?;
    }
    if basis.is_empty() {
        return Err(RbError::Format { path: snap_path, reason: "no snapshots recorded".into() });
    }

    let points = exp.validation_points()?;
    let results = validate(&basis, &model, &exp.op, &points, exp.gram(), workers)?;
    let out = run_dir.join("validation.csv");
    let mut header = numbered("mu", exp.spec.param_dim());
    header.push("true_error".into());
    let max = results.iter().filter_map(|(_, e)| *e).reduce(f64::max);
    let rows = results.into_iter().map(|(mu, e)| {
        let mut row: Vec<String> = mu.iter().map(|&c| fmt_f64(c)).collect();
        row.push(fmt_opt(e));
        row
    });
    write_csv(&out, &header, rows)?;
    Ok((out, max))
}

/// Writes the cancellation demo table; one row per `N`.
pub fn run_float_demo(n_values: &[u32], mu_samples: usize, seed: u64, path: &Path) -> Result<Vec<FloatDemoRow>> {
    let rows = float_demo(n_values, mu_samples, seed)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| RbError::io(parent, e))?;
    }
    let header = ["n", "a", "max_stable", "max_expanded", "max_exact"].map(String::from);
    write_csv(
        path,
        &header,
        rows.iter().map(|r| {
            vec![r.n.to_string(), fmt_f64(r.a), fmt_f64(r.max_stable), fmt_f64(r.max_expanded), fmt_f64(r.max_exact)]
        }),
    )?;
    Ok(rows)
}
