// Cardinal Lagrange functions `c_m(μ)` of a reduced space. For the
// problem with a `sign(μ)` coefficient they jump across `μ = 0`.

use rbm_core::harness::make_training_grid;
use rbm_core::rbm::{lagrange_coefficients, rb_solve};
use rbm_core::truth::{assemble_affine, ProblemKind, ProblemSpec, TruthDiscretization};
use rbm_core::{greedy, EstimatorKind, EstimatorState, GreedyConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ProblemSpec::new(ProblemKind::OnedDiscontinuous);
    let disc = TruthDiscretization::new(20)?;
    let op = assemble_affine(&spec, &disc)?;
    let training = make_training_grid(&spec.param_domain, &[128])?;
    let mut config = GreedyConfig::new(training.clone(), EstimatorKind::Stable);
    config.n_max = 6;
    let estimator = EstimatorState::new(config.estimator, &op, &disc.gram, config.rank_tol, config.drop_tol)?;
    let out = greedy(&config, &op, &disc.gram, estimator)?;

    let samples: Vec<_> = out.basis.sample_set().iter().map(|p| format!("{:+.3}", p[0])).collect();
    println!("snapshots at {}", samples.join(" "));
    // Cardinality at the snapshots themselves.
    for (n, mu) in out.basis.sample_set().iter().enumerate() {
        let c = lagrange_coefficients(&out.basis, &rb_solve(&out.model, &op, mu)?)?;
        assert!((c.values[n] - 1.0).abs() < 1e-8);
    }
    // Traces on both sides of zero.
    let mid = training.len() / 2;
    for mu in &training[mid - 2..mid + 2] {
        let c = lagrange_coefficients(&out.basis, &rb_solve(&out.model, &op, mu)?)?;
        let row: Vec<_> = c.values.iter().map(|v| format!("{v:+.4}")).collect();
        println!("mu = {:+.4}: {}  Lebesgue {:.3}", mu[0], row.join(" "), c.values.lp_norm(1));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
