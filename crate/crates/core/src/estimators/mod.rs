//! Greedy objectives.
//!
//! * [`ClassicalEstimator`] evaluates the residual dual norm through the
//!   expanded quadratic form. Cheap and standard, but it cannot resolve norms
//!   below roughly `√ε` times the load.
//! * [`StableEstimator`] evaluates the same norm from a pivoted QR of the
//!   operator representers and keeps relative accuracy to machine precision.
//! * [`LebesgueEstimator`] ignores the residual altogether and returns the
//!   Lebesgue function of the snapshot interpolation.
//!
//! Online evaluation never touches a truth-sized object for the two residual
//! estimators: they read only tables and factors sized by `N`, `Q_a`, `Q_f`.

mod classical;
mod coercivity;
mod float_demo;
mod lebesgue;
mod oracle;
mod riesz;
mod stable;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{RbError, Result};
use crate::numerics::GramSpec;
use crate::rbm::{lagrange_coefficients, ReducedBasis};
use crate::truth::AffineOperator;

pub use classical::estimator_classical;
pub use coercivity::{coercivity_lower_bound, AlphaMode, CoercivityBound, DEFAULT_ALPHA_FLOOR};
pub use float_demo::{demo_mu_samples, float_demo, FloatDemoRow};
pub use lebesgue::estimator_lebesgue;
pub use oracle::residual_norm_oracle;
pub use riesz::{build_riesz_data, ResidualTables, RieszData};
pub use stable::{
    build_stable_factors, build_stable_factors_with_bases, estimator_stable, stable_factors_from_columns,
    StableBases, StableFactors,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Classical,
    Stable,
    Lebesgue,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Classical, EstimatorKind::Stable, EstimatorKind::Lebesgue];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Classical => "classical",
            EstimatorKind::Stable => "stable",
            EstimatorKind::Lebesgue => "lebesgue",
        }
    }

    /// Whether the value bounds the error (up to `α_LB`); the Lebesgue
    /// indicator does not.
    pub fn is_residual_based(self) -> bool {
        !matches!(self, EstimatorKind::Lebesgue)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = RbError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RbError::invalid(format!("unknown estimator '{s}' (expected classical, stable or lebesgue)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateValue {
    pub value: f64,
    /// The classical quadratic went negative and was clamped to zero.
    pub clamped: bool,
    pub alpha_used: f64,
}

/// `c⃗` with `c[m·Q_a + q] = θ_a^q(μ)·û_m`, matching the representer order.
pub fn affine_coefficients(theta_a: &[f64], u_hat: &DVector<f64>) -> DVector<f64> {
    let q_a = theta_a.len();
    DVector::from_fn(u_hat.len() * q_a, |k, _| theta_a[k % q_a] * u_hat[k / q_a])
}

pub(crate) fn check_alpha(alpha_lb: f64) -> Result<()> {
    if alpha_lb > 0.0 && alpha_lb.is_finite() {
        Ok(())
    } else {
        Err(RbError::invalid(format!("alpha_lb must be positive and finite, got {alpha_lb}")))
    }
}

/// Offline state of a greedy objective.
///
/// `update` is called after every basis extension and is the only mutating
/// step; `evaluate` is a pure read and may run concurrently.
pub trait Estimator: Send + Sync {
    fn kind(&self) -> EstimatorKind;

    fn update(&mut self, op: &AffineOperator, basis: &ReducedBasis) -> Result<()>;

    fn evaluate(
        &self,
        op: &AffineOperator,
        basis: &ReducedBasis,
        mu: &[f64],
        u_hat: &DVector<f64>,
        alpha_lb: f64,
    ) -> Result<EstimateValue>;
}

#[derive(Clone, Debug)]
pub struct ClassicalEstimator {
    riesz: RieszData,
}

impl ClassicalEstimator {
    pub fn new(op: &AffineOperator, gram: &GramSpec) -> Result<Self> {
        Ok(ClassicalEstimator { riesz: RieszData::new(op, gram)? })
    }

    pub fn riesz(&self) -> &RieszData {
        &self.riesz
    }
}

impl Estimator for ClassicalEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Classical
    }

    fn update(&mut self, op: &AffineOperator, basis: &ReducedBasis) -> Result<()> {
        self.riesz.extend_to(op, basis);
        Ok(())
    }

    fn evaluate(
        &self,
        op: &AffineOperator,
        _basis: &ReducedBasis,
        mu: &[f64],
        u_hat: &DVector<f64>,
        alpha_lb: f64,
    ) -> Result<EstimateValue> {
        estimator_classical(self.riesz.tables(), op, mu, u_hat, alpha_lb)
    }
}

/// Keeps the representers hierarchically and refactors them from scratch
/// after each extension.
#[derive(Clone, Debug)]
pub struct StableEstimator {
    riesz: RieszData,
    factors: StableFactors,
    rank_tol: f64,
    drop_tol: f64,
}

impl StableEstimator {
    pub fn new(op: &AffineOperator, gram: &GramSpec, rank_tol: f64, drop_tol: f64) -> Result<Self> {
        let riesz = RieszData::new(op, gram)?;
        let factors = build_stable_factors(&riesz, rank_tol, drop_tol)?;
        Ok(StableEstimator { riesz, factors, rank_tol, drop_tol })
    }

    pub fn riesz(&self) -> &RieszData {
        &self.riesz
    }

    pub fn factors(&self) -> &StableFactors {
        &self.factors
    }
}

impl Estimator for StableEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Stable
    }

    fn update(&mut self, op: &AffineOperator, basis: &ReducedBasis) -> Result<()> {
        self.riesz.extend_to(op, basis);
        self.factors = build_stable_factors(&self.riesz, self.rank_tol, self.drop_tol)?;
        Ok(())
    }

    fn evaluate(
        &self,
        op: &AffineOperator,
        _basis: &ReducedBasis,
        mu: &[f64],
        u_hat: &DVector<f64>,
        alpha_lb: f64,
    ) -> Result<EstimateValue> {
        estimator_stable(&self.factors, op, mu, u_hat, alpha_lb)
    }
}

/// Stateless: the Lagrange coefficients come from the basis itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct LebesgueEstimator;

impl Estimator for LebesgueEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Lebesgue
    }

    fn update(&mut self, _op: &AffineOperator, _basis: &ReducedBasis) -> Result<()> {
        Ok(())
    }

    fn evaluate(
        &self,
        _op: &AffineOperator,
        basis: &ReducedBasis,
        _mu: &[f64],
        u_hat: &DVector<f64>,
        _alpha_lb: f64,
    ) -> Result<EstimateValue> {
        Ok(estimator_lebesgue(&lagrange_coefficients(basis, u_hat)?.values))
    }
}

/// Any of the three estimators, selected at run time.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)] // one long-lived value per run
pub enum EstimatorState {
    Classical(ClassicalEstimator),
    Stable(StableEstimator),
    Lebesgue(LebesgueEstimator),
}

impl EstimatorState {
    pub fn new(kind: EstimatorKind, op: &AffineOperator, gram: &GramSpec, rank_tol: f64, drop_tol: f64) -> Result<Self> {
        Ok(match kind {
            EstimatorKind::Classical => EstimatorState::Classical(ClassicalEstimator::new(op, gram)?),
            EstimatorKind::Stable => EstimatorState::Stable(StableEstimator::new(op, gram, rank_tol, drop_tol)?),
            EstimatorKind::Lebesgue => EstimatorState::Lebesgue(LebesgueEstimator),
        })
    }

    fn inner(&self) -> &dyn Estimator {
        match self {
            EstimatorState::Classical(e) => e,
            EstimatorState::Stable(e) => e,
            EstimatorState::Lebesgue(e) => e,
        }
    }
}

impl Estimator for EstimatorState {
    fn kind(&self) -> EstimatorKind {
        self.inner().kind()
    }

    fn update(&mut self, op: &AffineOperator, basis: &ReducedBasis) -> Result<()> {
        match self {
            EstimatorState::Classical(e) => e.update(op, basis),
            EstimatorState::Stable(e) => e.update(op, basis),
            EstimatorState::Lebesgue(e) => e.update(op, basis),
        }
    }

    fn evaluate(
        &self,
        op: &AffineOperator,
        basis: &ReducedBasis,
        mu: &[f64],
        u_hat: &DVector<f64>,
        alpha_lb: f64,
    ) -> Result<EstimateValue> {
        self.inner().evaluate(op, basis, mu, u_hat, alpha_lb)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DMatrix;

    use super::*;
    use crate::numerics::GramSpec;
    use crate::rbm::{extend_basis, rb_solve, ReducedModel};
    use crate::truth::{truth_solve, ParamPoint};

    /// Small nonsymmetric two-term operator `A(μ) = A₀ + μA₁` with a
    /// two-term load.
    fn toy_operator(n: usize) -> AffineOperator {
        let a0 = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if i.abs_diff(j) == 1 {
                -1.0 + 0.1 * (i as f64 - j as f64)
            } else {
                0.0
            }
        });
        let a1 = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + (i as f64) / n as f64 } else { 0.0 });
        let f0 = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.3).sin());
        let f1 = DVector::from_fn(n, |i, _| (i as f64 * 0.7).cos());
        AffineOperator::new(
            vec![a0, a1],
            vec![f0, f1],
            Arc::new(|mu: &[f64]| vec![1.0, mu[0]]),
            Arc::new(|mu: &[f64]| vec![1.0, mu[0] * mu[0]]),
            1,
        )
        .unwrap()
    }

    fn spd_gram(n: usize) -> GramSpec {
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1);
        GramSpec::explicit(b.transpose() * &b + DMatrix::identity(n, n) * 2.0).unwrap()
    }

    fn built(op: &AffineOperator, gram: &GramSpec, mus: &[f64]) -> (ReducedBasis, ReducedModel) {
        let mut basis = ReducedBasis::new(gram.clone(), 1e-10);
        let mut model = ReducedModel::new(op);
        for &m in mus {
            let s = truth_solve(op, &ParamPoint::new(vec![m])).unwrap();
            extend_basis(&mut basis, &mut model, s, op).unwrap();
        }
        (basis, model)
    }

    #[test]
    fn affine_coefficients_order() {
        let c = affine_coefficients(&[2.0, 3.0], &DVector::from_vec(vec![1.0, 10.0]));
        assert_eq!(c.as_slice(), &[2.0, 3.0, 20.0, 30.0]);
    }

    #[test]
    fn kind_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
        }
        assert!("fast".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn nonpositive_alpha_rejected() {
        let op = toy_operator(6);
        let riesz = RieszData::new(&op, &GramSpec::Identity).unwrap();
        let u = DVector::zeros(0);
        assert!(estimator_classical(riesz.tables(), &op, &[0.5], &u, 0.0).is_err());
        let f = build_stable_factors(&riesz, 1e-10, 1e-10).unwrap();
        assert!(estimator_stable(&f, &op, &[0.5], &u, -1.0).is_err());
    }

    #[test]
    fn identity_gram_representers_are_raw_vectors() {
        let op = toy_operator(8);
        let (basis, _) = built(&op, &GramSpec::Identity, &[0.2]);
        let riesz = build_riesz_data(&op, &basis).unwrap();
        for q in 0..op.q_f() {
            assert_eq!(riesz.representer_c(q), op.f_components[q]);
        }
        assert_eq!(riesz.representer_l(0, 1), &op.a_components[1] * &basis.xi()[0]);
    }

    #[test]
    fn single_term_ll_is_squared_norm() {
        let mut op = toy_operator(8);
        op = AffineOperator::new(
            vec![op.a_components[0].clone()],
            vec![op.f_components[0].clone()],
            Arc::new(|_: &[f64]| vec![1.0]),
            Arc::new(|_: &[f64]| vec![1.0]),
            1,
        )
        .unwrap();
        let (basis, _) = built(&op, &GramSpec::Identity, &[0.3]);
        let riesz = build_riesz_data(&op, &basis).unwrap();
        let l = riesz.representer_l(0, 0);
        assert_eq!(riesz.tables().ll.shape(), (1, 1));
        assert!((riesz.tables().ll[(0, 0)] - l.norm_squared()).abs() <= 1e-14 * l.norm_squared());
    }

    #[test]
    fn explicit_gram_representers_reproduce_functionals() {
        let n = 30;
        let op = toy_operator(n);
        let gram = spd_gram(n);
        let riesz = RieszData::new(&op, &gram).unwrap();
        let g = gram.matrix().unwrap();
        for k in 0..10 {
            let v = DVector::from_fn(n, |i, _| ((i * 13 + k * 7) as f64).sin());
            for q in 0..op.q_f() {
                let c = riesz.representer_c(q);
                let lhs = c.dot(&(g * &v));
                let rhs = op.f_components[q].dot(&v);
                assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn gram_dimension_mismatch_is_invalid_gram() {
        let op = toy_operator(6);
        let err = RieszData::new(&op, &spd_gram(5)).unwrap_err();
        assert!(matches!(err, RbError::InvalidGram(_)));
    }

    #[test]
    fn tables_match_direct_recomputation_and_grow_hierarchically() {
        let op = toy_operator(20);
        let gram = spd_gram(20);
        let (basis, _) = built(&op, &gram, &[0.1, 0.6, 0.9]);
        let small = build_riesz_data(&op, &basis.truncated(2)).unwrap();
        let full = build_riesz_data(&op, &basis).unwrap();
        let t = full.tables();
        let k = 2 * op.q_a();
        assert_eq!(t.ll.view((0, 0), (k, k)), small.tables().ll.view((0, 0), (k, k)));
        assert_eq!(t.cl.columns(0, k), small.tables().cl.columns(0, k));
        for m in 0..3 {
            for q in 0..2 {
                let l = full.representer_l(m, q);
                let direct = gram.inner(&l, &full.representer_c(1));
                assert!((t.cl[(1, m * 2 + q)] - direct).abs() <= 1e-13 * direct.abs().max(1.0));
            }
        }
        assert_eq!(t.ll, t.ll.transpose());
    }

    #[test]
    fn zero_load_and_zero_coefficients_give_zero() {
        let op = toy_operator(10).with_scaled_load(0.0);
        let (basis, _) = built(&toy_operator(10), &GramSpec::Identity, &[0.4]);
        let riesz = build_riesz_data(&op, &basis).unwrap();
        let u = DVector::zeros(1);
        assert_eq!(estimator_classical(riesz.tables(), &op, &[0.5], &u, 1.0).unwrap().value, 0.0);
        let f = build_stable_factors(&riesz, 1e-10, 1e-10).unwrap();
        assert_eq!(estimator_stable(&f, &op, &[0.5], &u, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn empty_basis_stable_is_load_norm() {
        let op = toy_operator(12);
        let riesz = RieszData::new(&op, &GramSpec::Identity).unwrap();
        let f = build_stable_factors(&riesz, 1e-10, 1e-10).unwrap();
        assert_eq!(f.rank, 0);
        let mu = [0.7];
        let e = estimator_stable(&f, &op, &mu, &DVector::zeros(0), 2.0).unwrap();
        let expect = op.load(&mu).norm() / 2.0;
        assert!((e.value - expect).abs() <= 1e-13 * expect);
        assert_eq!(e.alpha_used, 2.0);
    }

    #[test]
    fn load_inside_range_gives_empty_complement() {
        // One-term operator equal to the identity and a load equal to the
        // single snapshot: the load representer lies in range(𝓑).
        let n = 7;
        let f0 = DVector::from_fn(n, |i, _| 1.0 + i as f64);
        let op = AffineOperator::new(
            vec![DMatrix::identity(n, n)],
            vec![f0],
            Arc::new(|_: &[f64]| vec![1.0]),
            Arc::new(|_: &[f64]| vec![1.0]),
            1,
        )
        .unwrap();
        let (basis, _) = built(&op, &GramSpec::Identity, &[0.0]);
        let riesz = build_riesz_data(&op, &basis).unwrap();
        let f = build_stable_factors(&riesz, 1e-10, 1e-10).unwrap();
        assert_eq!(f.complement_dim(), 0);
        assert!(f.w_coords.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stable_and_classical_match_oracle_for_large_residuals() {
        let op = toy_operator(25);
        let gram = spd_gram(25);
        let (basis, model) = built(&op, &gram, &[0.05, 0.5]);
        let riesz = build_riesz_data(&op, &basis).unwrap();
        let f = build_stable_factors(&riesz, 1e-10, 1e-10).unwrap();
        for k in 0..10 {
            let mu = [k as f64 / 9.0];
            let u = rb_solve(&model, &op, &mu).unwrap() + DVector::from_vec(vec![0.3, -0.2 * k as f64]);
            let oracle = residual_norm_oracle(&op, &basis, &mu, &u, &gram).unwrap();
            let s = estimator_stable(&f, &op, &mu, &u, 1.0).unwrap().value;
            let c = estimator_classical(riesz.tables(), &op, &mu, &u, 1.0).unwrap().value;
            assert!((s - oracle).abs() <= 1e-10 * oracle, "{s} vs {oracle}");
            assert!((c - oracle).abs() <= 1e-8 * oracle, "{c} vs {oracle}");
        }
    }

    #[test]
    fn duplicated_column_does_not_change_values() {
        let op = toy_operator(16);
        let (basis, model) = built(&op, &GramSpec::Identity, &[0.1, 0.8]);
        let riesz = build_riesz_data(&op, &basis).unwrap();
        let cols = riesz.l_whitened().to_vec();
        let mut dup = cols.clone();
        dup.push(cols[1].clone());
        dup.push(DVector::zeros(cols[0].len()));
        let (plain, _) = stable_factors_from_columns(&cols, riesz.c_whitened(), 2, 1e-10, 1e-10).unwrap();
        let (dupf, _) = stable_factors_from_columns(&dup, riesz.c_whitened(), 2, 1e-10, 1e-10).unwrap();
        assert!(dupf.rank < 6);
        // Away from the snapshots, where the norm is well above roundoff.
        for &m in &[0.0, 0.3, 0.45, 0.6, 1.0] {
            let mu = [m];
            let u = rb_solve(&model, &op, &mu).unwrap();
            let theta_f = op.theta_f(&mu);
            let c = affine_coefficients(&op.theta_a(&mu), &u);
            // The duplicate pair carries zero weight.
            let c_dup = c.clone().resize_vertically(6, 0.0);
            let a = plain.residual_norm(&theta_f, &c);
            let b = dupf.residual_norm(&theta_f, &c_dup);
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn stable_reaches_far_below_sqrt_eps_at_snapshots() {
        let op = toy_operator(30);
        let mus = [0.0, 0.35, 0.7, 1.0];
        let (basis, model) = built(&op, &GramSpec::Identity, &mus);
        let mut est = StableEstimator::new(&op, &GramSpec::Identity, 1e-10, 1e-10).unwrap();
        est.update(&op, &basis).unwrap();
        for &m in &mus {
            let u = rb_solve(&model, &op, &[m]).unwrap();
            let v = est.evaluate(&op, &basis, &[m], &u, 1.0).unwrap().value;
            assert!(v <= 1e-12 * op.load(&[m]).norm(), "{v}");
        }
    }

    #[test]
    fn lebesgue_is_one_at_snapshots() {
        let op = toy_operator(15);
        let mus = [0.0, 0.4, 0.9];
        let (basis, model) = built(&op, &GramSpec::Identity, &mus);
        for &m in &mus {
            let u = rb_solve(&model, &op, &[m]).unwrap();
            let v = LebesgueEstimator.evaluate(&op, &basis, &[m], &u, 1.0).unwrap().value;
            assert!((v - 1.0).abs() <= 1e-8, "{v}");
        }
    }

    #[test]
    fn state_dispatch_reports_kind() {
        let op = toy_operator(6);
        for k in EstimatorKind::ALL {
            let s = EstimatorState::new(k, &op, &GramSpec::Identity, 1e-10, 1e-10).unwrap();
            assert_eq!(s.kind(), k);
        }
    }

    #[test]
    fn coercivity_unit_and_identity() {
        let n = 5;
        let op = AffineOperator::new(
            vec![DMatrix::identity(n, n)],
            vec![DVector::from_element(n, 1.0)],
            Arc::new(|_: &[f64]| vec![1.0]),
            Arc::new(|_: &[f64]| vec![1.0]),
            1,
        )
        .unwrap();
        let unit = coercivity_lower_bound(&op, &[0.3], AlphaMode::Unit, &GramSpec::Identity, 1e-12).unwrap();
        assert_eq!(unit.value, 1.0);
        let eig = coercivity_lower_bound(&op, &[0.3], AlphaMode::ExactEig, &GramSpec::Identity, 1e-12).unwrap();
        assert!((eig.value - 1.0).abs() < 1e-12);
        assert!(!eig.degenerate);
    }

    #[test]
    fn coercivity_floor_flags_degeneracy() {
        let n = 4;
        let op = AffineOperator::new(
            vec![-DMatrix::<f64>::identity(n, n)],
            vec![DVector::from_element(n, 1.0)],
            Arc::new(|_: &[f64]| vec![1.0]),
            Arc::new(|_: &[f64]| vec![1.0]),
            1,
        )
        .unwrap();
        let b = coercivity_lower_bound(&op, &[0.0], AlphaMode::ExactEig, &GramSpec::Identity, 1e-6).unwrap();
        assert_eq!(b.value, 1e-6);
        assert!(b.degenerate);
    }
}
