use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extend_basis, rb_solve, reconstruct, ReducedBasis, ReducedModel, DEFAULT_SNAPSHOT_DROP_TOL};
use crate::error::{RbError, Result};
use crate::estimators::{coercivity_lower_bound, AlphaMode, EstimateValue, Estimator, EstimatorKind};
use crate::numerics::{GramSpec, DEFAULT_RANK_TOL};
use crate::truth::{truth_solve, AffineOperator, ParamPoint};

#[derive(Clone, Debug)]
pub struct GreedyConfig {
    pub eps_tol: f64,
    pub n_max: usize,
    pub training_set: Vec<ParamPoint>,
    pub estimator: EstimatorKind,
    pub seed: u64,
    pub alpha_mode: AlphaMode,
    pub alpha_floor: f64,
    /// Threads used for each sweep. Results do not depend on this.
    pub workers: usize,
    pub drop_tol: f64,
    pub rank_tol: f64,
}

impl GreedyConfig {
    pub fn new(training_set: Vec<ParamPoint>, estimator: EstimatorKind) -> Self {
        GreedyConfig {
            eps_tol: 1e-14,
            n_max: 40,
            training_set,
            estimator,
            seed: 0,
            alpha_mode: AlphaMode::Unit,
            alpha_floor: crate::estimators::DEFAULT_ALPHA_FLOOR,
            workers: 1,
            drop_tol: DEFAULT_SNAPSHOT_DROP_TOL,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }

    pub fn validate(&self, op: &AffineOperator) -> Result<()> {
        if !(self.eps_tol > 0.0) {
            return Err(RbError::invalid(format!("eps_tol must be positive, got {}", self.eps_tol)));
        }
        if self.n_max == 0 {
            return Err(RbError::invalid("n_max must be at least 1"));
        }
        if self.training_set.is_empty() {
            return Err(RbError::invalid("training set is empty"));
        }
        if self.workers == 0 {
            return Err(RbError::invalid("workers must be at least 1"));
        }
        if let Some(bad) = self.training_set.iter().find(|p| p.len() != op.param_dim()) {
            return Err(RbError::invalid(format!(
                "training point {bad} has dimension {}, operator expects {}",
                bad.len(),
                op.param_dim()
            )));
        }
        Ok(())
    }

    /// The index of the seeded random first sample.
    pub fn initial_index(&self) -> usize {
        ChaCha8Rng::seed_from_u64(self.seed).random_range(0..self.training_set.len())
    }
}

/// One greedy sweep: the estimate maximum over the unselected training
/// points and the parameter chosen there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyRecord {
    /// Basis size during the sweep.
    pub n: usize,
    pub index: usize,
    pub mu: ParamPoint,
    pub estimate: f64,
    pub clamped: bool,
    /// `‖u(μ) − u_n(μ)‖_X` at the chosen point, available whenever the truth
    /// solve there succeeded.
    pub true_error_at_argmax: Option<f64>,
    /// Whether the chosen snapshot was added to the basis.
    pub extended: bool,
    /// Seconds spent in the sweep; not part of any deterministic output.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// The recorded estimate fell to `eps_tol` or below.
    Tolerance,
    /// The basis reached `n_max`.
    MaxSize,
    /// A selected point out-ranked every unselected one, or the chosen
    /// snapshot was numerically dependent on the basis.
    Saturated,
    /// A numerical failure after the first snapshot.
    Failed(String),
}

impl Termination {
    pub fn label(&self) -> String {
        match self {
            Termination::Tolerance => "tolerance".into(),
            Termination::MaxSize => "max-size".into(),
            Termination::Saturated => "basis saturated".into(),
            Termination::Failed(msg) => format!("failed: {msg}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyHistory {
    pub initial_index: usize,
    pub initial_mu: ParamPoint,
    pub records: Vec<GreedyRecord>,
    pub termination: Termination,
}

impl GreedyHistory {
    /// Selection order of the training indices, starting with the seed.
    pub fn selected_indices(&self) -> Vec<usize> {
        std::iter::once(self.initial_index)
            .chain(self.records.iter().filter(|r| r.extended).map(|r| r.index))
            .collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.estimate).collect()
    }
}

#[derive(Clone, Debug)]
pub struct GreedyOutcome<E> {
    pub basis: ReducedBasis,
    pub model: ReducedModel,
    pub history: GreedyHistory,
    pub estimator: E,
}

/// Read-only view handed to an observer after each sweep, before the basis
/// is extended.
pub struct SweepView<'a, E> {
    pub n: usize,
    pub basis: &'a ReducedBasis,
    pub model: &'a ReducedModel,
    pub estimator: &'a E,
    /// Estimate at every training point, in training-set order.
    pub estimates: &'a [EstimateValue],
    pub record: &'a GreedyRecord,
}

pub fn greedy<E: Estimator>(
    config: &GreedyConfig,
    op: &AffineOperator,
    gram: &GramSpec,
    estimator: E,
) -> Result<GreedyOutcome<E>> {
    greedy_with_observer(config, op, gram, estimator, |_| Ok(()))
}

/// Weak greedy selection: seed with a random training point, then repeatedly
/// sweep the estimator over the training set and add the truth snapshot at
/// the maximiser. The loop runs while the last estimate exceeds `eps_tol` and
/// the basis is smaller than `n_max`.
///
/// Selected points are excluded from the argmax. Ties go to the lowest index.
pub fn greedy_with_observer<E, F>(
    config: &GreedyConfig,
    op: &AffineOperator,
    gram: &GramSpec,
    mut estimator: E,
    mut observer: F,
) -> Result<GreedyOutcome<E>>
where
    E: Estimator,
    F: FnMut(&SweepView<'_, E>) -> Result<()>,
{
    config.validate(op)?;
    gram.check_dim(op.dim())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| RbError::invalid(format!("cannot build worker pool: {e}")))?;

    let training = &config.training_set;
    let alphas: Vec<f64> = match config.alpha_mode {
        AlphaMode::Unit => vec![1.0; training.len()],
        mode => pool.install(|| {
            training
                .par_iter()
                .map(|mu| Ok(coercivity_lower_bound(op, mu, mode, gram, config.alpha_floor)?.value))
                .collect::<Result<Vec<_>>>()
        })?,
    };

    let initial_index = config.initial_index();
    let initial_mu = training[initial_index].clone();
    let mut basis = ReducedBasis::new(gram.clone(), config.drop_tol);
    let mut model = ReducedModel::new(op);
    let first = truth_solve(op, &initial_mu)?;
    extend_basis(&mut basis, &mut model, first, op)?;
    estimator.update(op, &basis)?;

    let mut selected = vec![false; training.len()];
    selected[initial_index] = true;
    let mut records = Vec::new();
    let mut eps = 2.0 * config.eps_tol;
    let mut termination = None;

    while eps > config.eps_tol && basis.len() < config.n_max {
        let started = Instant::now();
        let n = basis.len();
        let sweep = pool.install(|| {
            training
                .par_iter()
                .zip(&alphas)
                .map(|(mu, &alpha)| evaluate_point(&estimator, op, &basis, &model, mu, alpha))
                .collect::<Result<Vec<_>>>()
        });
        let estimates = match sweep {
            Ok(v) => v,
            Err(e) => {
                termination = Some(Termination::Failed(e.to_string()));
                break;
            }
        };

        let Some(index) = argmax(&estimates, &selected) else {
            termination = Some(Termination::Saturated);
            break;
        };
        let chosen = estimates[index];
        eps = chosen.value;
        let mu = training[index].clone();
        let mut record = GreedyRecord {
            n,
            index,
            mu: mu.clone(),
            estimate: chosen.value,
            clamped: chosen.clamped,
            true_error_at_argmax: None,
            extended: false,
            wall_time: 0.0,
        };

        // The Lebesgue indicator equals one at every selected point by
        // construction, so only residual estimates are compared there.
        let saturated = config.estimator.is_residual_based()
            && estimates
                .iter()
                .zip(&selected)
                .any(|(e, &s)| s && e.value > chosen.value);

        let mut snapshot = None;
        if !saturated {
            match truth_solve(op, &mu) {
                Ok(s) => {
                    let u_n = rb_solve(&model, op, &mu).and_then(|u| reconstruct(&basis, &u));
                    if let Ok(u_n) = u_n {
                        record.true_error_at_argmax = Some(gram.norm(&(&s.values - u_n)));
                    }
                    snapshot = Some(s);
                }
                Err(e) => termination = Some(Termination::Failed(e.to_string())),
            }
        }
        record.wall_time = started.elapsed().as_secs_f64();

        let view = SweepView { n, basis: &basis, model: &model, estimator: &estimator, estimates: &estimates, record: &record };
        observer(&view)?;

        if saturated {
            records.push(record);
            termination = Some(Termination::Saturated);
            break;
        }
        let Some(snapshot) = snapshot else {
            records.push(record);
            break;
        };
        match extend_basis(&mut basis, &mut model, snapshot, op) {
            Ok(()) => {
                record.extended = true;
                selected[index] = true;
                records.push(record);
            }
            Err(RbError::DependentSnapshot { .. }) => {
                records.push(record);
                termination = Some(Termination::Saturated);
                break;
            }
            Err(e) => {
                records.push(record);
                termination = Some(Termination::Failed(e.to_string()));
                break;
            }
        }
        if let Err(e) = estimator.update(op, &basis) {
            termination = Some(Termination::Failed(e.to_string()));
            break;
        }
    }

    let termination = termination.unwrap_or(if eps <= config.eps_tol { Termination::Tolerance } else { Termination::MaxSize });
    Ok(GreedyOutcome {
        basis,
        model,
        history: GreedyHistory { initial_index, initial_mu, records, termination },
        estimator,
    })
}

/// A point where the reduced system is singular is treated as maximally
/// badly approximated.
fn evaluate_point<E: Estimator>(
    estimator: &E,
    op: &AffineOperator,
    basis: &ReducedBasis,
    model: &ReducedModel,
    mu: &[f64],
    alpha: f64,
) -> Result<EstimateValue> {
    match rb_solve(model, op, mu) {
        Ok(u_hat) => estimator.evaluate(op, basis, mu, &u_hat, alpha),
        Err(RbError::Singular { .. }) => Ok(EstimateValue { value: f64::INFINITY, clamped: false, alpha_used: alpha }),
        Err(e) => Err(e),
    }
}

/// Largest value among unselected entries; the first index wins ties. NaN
/// never wins.
fn argmax(values: &[EstimateValue], selected: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (v, &s)) in values.iter().zip(selected).enumerate() {
        if s || v.value.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v.value > values[b].value) {
            best = Some(i);
        }
    }
    best
}
