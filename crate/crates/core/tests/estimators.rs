use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbm_core::estimators::{
    affine_coefficients, build_stable_factors_with_bases, coercivity_lower_bound, residual_norm_oracle, AlphaMode,
    ClassicalEstimator, LebesgueEstimator, StableEstimator, DEFAULT_ALPHA_FLOOR,
};
use rbm_core::harness::make_training_grid;
use rbm_core::numerics::GramSpec;
use rbm_core::rbm::{lagrange_coefficients, rb_solve, reconstruct, ReducedBasis, ReducedModel};
use rbm_core::truth::{assemble_affine, AffineOperator, ParamPoint, ProblemKind, ProblemSpec, TruthDiscretization};
use rbm_core::{greedy, Estimator, EstimatorKind, EstimatorState, GreedyConfig};

struct Case {
    spec: ProblemSpec,
    op: AffineOperator,
    basis: ReducedBasis,
    model: ReducedModel,
}

fn case(kind: ProblemKind, nodes: usize, grid: &[usize], n: usize) -> Case {
    let spec = ProblemSpec::new(kind);
    let disc = TruthDiscretization::new(nodes).unwrap();
    let op = assemble_affine(&spec, &disc).unwrap();
    let (basis, model) = build(&op, &spec, grid, n);
    Case { spec, op, basis, model }
}

fn build(op: &AffineOperator, spec: &ProblemSpec, grid: &[usize], n: usize) -> (ReducedBasis, ReducedModel) {
    let training = make_training_grid(&spec.param_domain, grid).unwrap();
    let mut config = GreedyConfig::new(training, EstimatorKind::Stable);
    config.n_max = n;
    let est = EstimatorState::new(EstimatorKind::Stable, op, &GramSpec::Identity, 1e-10, 1e-14).unwrap();
    let out = greedy(&config, op, &GramSpec::Identity, est).unwrap();
    (out.basis, out.model)
}

fn random_mu(spec: &ProblemSpec, rng: &mut ChaCha8Rng) -> ParamPoint {
    ParamPoint::new(spec.param_domain.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect::<Vec<_>>())
}

fn random_u(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Sum of the magnitudes entering the expanded quadratic, as a norm: the
/// square root of the largest term cancellation has to eat through.
fn quadratic_scale(est: &ClassicalEstimator, op: &AffineOperator, mu: &[f64], u: &DVector<f64>) -> f64 {
    let t = est.riesz().tables();
    let c = affine_coefficients(&op.theta_a(mu), u);
    let f: f64 = op.theta_f(mu).iter().enumerate().map(|(q, th)| th.abs() * t.cc[(q, q)].sqrt()).sum();
    let a: f64 = c.iter().enumerate().map(|(j, cj)| cj.abs() * t.ll[(j, j)].sqrt()).sum();
    f + a
}

#[test]
fn residual_estimators_match_truth_oracle_for_large_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for c in [case(ProblemKind::OnedContinuous, 24, &[64], 6), case(ProblemKind::TwodSecond, 20, &[12, 12], 6)] {
        let mut classical = ClassicalEstimator::new(&c.op, &GramSpec::Identity).unwrap();
        let mut stable = StableEstimator::new(&c.op, &GramSpec::Identity, 1e-10, 1e-14).unwrap();
        classical.update(&c.op, &c.basis).unwrap();
        stable.update(&c.op, &c.basis).unwrap();
        let mut checked = 0;
        for _ in 0..20 {
            let mu = random_mu(&c.spec, &mut rng);
            let u = random_u(c.basis.len(), &mut rng);
            let alpha = rng.random_range(0.5..2.0);
            let oracle = residual_norm_oracle(&c.op, &c.basis, &mu, &u, &GramSpec::Identity).unwrap() / alpha;
            if oracle * alpha < 1e-4 {
                continue;
            }
            checked += 1;
            let e1 = classical.evaluate(&c.op, &c.basis, &mu, &u, alpha).unwrap();
            let e2 = stable.evaluate(&c.op, &c.basis, &mu, &u, alpha).unwrap();
            assert!(!e1.clamped);
            assert!(rel(e1.value, oracle) <= 1e-8, "classical {} vs {oracle}", e1.value);
            assert!(rel(e2.value, oracle) <= 1e-10, "stable {} vs {oracle}", e2.value);
            assert_eq!((e1.alpha_used, e2.alpha_used), (alpha, alpha));
        }
        assert!(checked >= 15);
    }
}

#[test]
fn stable_split_matches_truth_space_projections() {
    let c = case(ProblemKind::TwodFirst, 16, &[9, 5], 6);
    let mut stable = StableEstimator::new(&c.op, &GramSpec::Identity, 1e-10, 1e-14).unwrap();
    stable.update(&c.op, &c.basis).unwrap();
    let (factors, bases) = build_stable_factors_with_bases(stable.riesz(), 1e-10, 1e-14).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mu = random_mu(&c.spec, &mut rng);
        let u = random_u(c.basis.len(), &mut rng);
        let r = c.op.load(&mu) - c.op.matrix(&mu) * reconstruct(&c.basis, &u).unwrap();
        let (outside, inside) = factors.residual_parts(&c.op.theta_f(&mu), &affine_coefficients(&c.op.theta_a(&mu), &u));
        let scale = r.norm_squared();
        // Isometry: the first part is Qᵀr itself, the second carries the norm
        // of the complement component.
        let qtr = bases.q.tr_mul(&r);
        assert!((&inside - &qtr).norm() <= 1e-10 * r.norm());
        let complement = &r - &bases.q * &qtr;
        assert!((outside.norm_squared() - complement.norm_squared()).abs() <= 1e-10 * scale);
        assert!((inside.norm_squared() + outside.norm_squared() - scale).abs() <= 1e-10 * scale);
        assert!((bases.w.tr_mul(&complement).norm() - complement.norm()).abs() <= 1e-10 * r.norm());
    }
}

#[test]
fn scaling_the_load_scales_residual_estimators() {
    let c = case(ProblemKind::OnedContinuous, 20, &[48], 5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in [3.0, 1e-3, 250.0] {
        let scaled = c.op.with_scaled_load(s);
        for kind in [EstimatorKind::Classical, EstimatorKind::Stable] {
            let mut plain = EstimatorState::new(kind, &c.op, &GramSpec::Identity, 1e-10, 1e-14).unwrap();
            let mut big = EstimatorState::new(kind, &scaled, &GramSpec::Identity, 1e-10, 1e-14).unwrap();
            plain.update(&c.op, &c.basis).unwrap();
            big.update(&scaled, &c.basis).unwrap();
            for _ in 0..5 {
                let mu = random_mu(&c.spec, &mut rng);
                let u = random_u(c.basis.len(), &mut rng);
                let a = plain.evaluate(&c.op, &c.basis, &mu, &u, 1.0).unwrap().value;
                let b = big.evaluate(&scaled, &c.basis, &mu, &(&u * s), 1.0).unwrap().value;
                assert!(rel(b, s * a) <= 1e-12, "{kind} s={s}: {b} vs {}", s * a);
            }
        }
    }
}

#[test]
fn lebesgue_is_invariant_under_load_scaling() {
    let spec = ProblemSpec::new(ProblemKind::OnedContinuous);
    let disc = TruthDiscretization::new(20).unwrap();
    let op = assemble_affine(&spec, &disc).unwrap();
    let scaled = op.with_scaled_load(7.5);
    let (b1, m1) = build(&op, &spec, &[48], 6);
    let (b2, m2) = build(&scaled, &spec, &[48], 6);
    assert_eq!(b1.sample_set(), b2.sample_set());
    for mu in make_training_grid(&spec.param_domain, &[17]).unwrap() {
        let e1 = LebesgueEstimator.evaluate(&op, &b1, &mu, &rb_solve(&m1, &op, &mu).unwrap(), 1.0).unwrap();
        let e2 = LebesgueEstimator.evaluate(&scaled, &b2, &mu, &rb_solve(&m2, &scaled, &mu).unwrap(), 1.0).unwrap();
        assert!(rel(e1.value, e2.value) <= 1e-10);
    }
}

#[test]
fn snapshot_parameters_expose_the_classical_floor() {
    let c = case(ProblemKind::OnedContinuous, 32, &[128], 10);
    let mut classical = ClassicalEstimator::new(&c.op, &GramSpec::Identity).unwrap();
    let mut stable = StableEstimator::new(&c.op, &GramSpec::Identity, 1e-10, 1e-14).unwrap();
    classical.update(&c.op, &c.basis).unwrap();
    stable.update(&c.op, &c.basis).unwrap();
    let sqrt_eps = f64::EPSILON.sqrt();
    for (n, mu) in c.basis.sample_set().iter().enumerate() {
        let u = rb_solve(&c.model, &c.op, mu).unwrap();
        let f_norm = c.op.load(mu).norm();
        let e2 = stable.evaluate(&c.op, &c.basis, mu, &u, 1.0).unwrap().value;
        assert!(e2 <= 1e-12 * f_norm, "stable at snapshot {n}: {e2:e}");
        // The expanded quadratic can only resolve down to √ε times the
        // size of the terms that cancel.
        let e1 = classical.evaluate(&c.op, &c.basis, mu, &u, 1.0).unwrap().value;
        let floor = 10.0 * sqrt_eps * quadratic_scale(&classical, &c.op, mu, &u);
        assert!(e1 <= floor, "classical at snapshot {n}: {e1:e} above {floor:e}");
        assert!(e1 > 10.0 * e2 || e1 == 0.0);
        // Lebesgue value is one at every snapshot.
        let leb = lagrange_coefficients(&c.basis, &u).unwrap().values.lp_norm(1);
        assert!((leb - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn classical_clamps_only_in_the_cancellation_regime() {
    let c = case(ProblemKind::OnedContinuous, 32, &[128], 22);
    let mut classical = ClassicalEstimator::new(&c.op, &GramSpec::Identity).unwrap();
    classical.update(&c.op, &c.basis).unwrap();
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut clamps = 0;
    for mu in make_training_grid(&c.spec.param_domain, &[128]).unwrap() {
        let u = rb_solve(&c.model, &c.op, &mu).unwrap();
        let e = classical.evaluate(&c.op, &c.basis, &mu, &u, 1.0).unwrap();
        if e.clamped {
            clamps += 1;
            assert_eq!(e.value, 0.0);
            let oracle = residual_norm_oracle(&c.op, &c.basis, &mu, &u, &GramSpec::Identity).unwrap();
            assert!(oracle <= 10.0 * sqrt_eps * quadratic_scale(&classical, &c.op, &mu, &u));
        }
    }
    // At this size the true residual is below the floor near every snapshot.
    assert!(clamps > 0);
}

#[test]
fn exact_coercivity_shrinks_towards_the_degenerate_corner() {
    let spec = ProblemSpec::new(ProblemKind::TwodSecond);
    let disc = TruthDiscretization::new(16).unwrap();
    let op = assemble_affine(&spec, &disc).unwrap();
    let g = GramSpec::Identity;
    let center = coercivity_lower_bound(&op, &[0.0, 0.0], AlphaMode::ExactEig, &g, DEFAULT_ALPHA_FLOOR).unwrap();
    let corner = coercivity_lower_bound(&op, &[0.99, 0.99], AlphaMode::ExactEig, &g, DEFAULT_ALPHA_FLOOR).unwrap();
    assert!(corner.value < center.value, "{} vs {}", corner.value, center.value);
    assert!(!center.degenerate);
    let unit = coercivity_lower_bound(&op, &[0.99, 0.99], AlphaMode::Unit, &g, DEFAULT_ALPHA_FLOOR).unwrap();
    assert_eq!(unit.value, 1.0);
}

#[test]
fn estimator_tables_do_not_grow_with_truth_dimension() {
    for nodes in [12, 20] {
        let c = case(ProblemKind::TwodFirst, nodes, &[9, 5], 4);
        let mut stable = StableEstimator::new(&c.op, &GramSpec::Identity, 1e-10, 1e-14).unwrap();
        let mut classical = ClassicalEstimator::new(&c.op, &GramSpec::Identity).unwrap();
        stable.update(&c.op, &c.basis).unwrap();
        classical.update(&c.op, &c.basis).unwrap();
        let f = stable.factors();
        let cols = c.basis.len() * c.op.q_a();
        assert_eq!(f.rzt.shape(), (f.rank, cols));
        assert_eq!(f.qt_c.nrows(), f.rank);
        assert!(f.w_coords.nrows() <= c.op.q_f() + f.trailing.len());
        assert_eq!(classical.riesz().tables().ll.shape(), (cols, cols));
    }
}
