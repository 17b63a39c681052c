// The stabilized estimator tolerates a rank-deficient representer matrix:
// repeating every column of one snapshot lowers the QR rank but leaves the
// residual norm unchanged.

use nalgebra::DVector;
use rbm_core::estimators::{affine_coefficients, stable_factors_from_columns, StableEstimator};
use rbm_core::harness::make_training_grid;
use rbm_core::rbm::rb_solve;
use rbm_core::truth::{assemble_affine, ProblemKind, ProblemSpec, TruthDiscretization};
use rbm_core::{greedy, EstimatorKind, GreedyConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ProblemSpec::new(ProblemKind::TwodFirst);
    let disc = TruthDiscretization::new(14)?;
    let op = assemble_affine(&spec, &disc)?;
    let training = make_training_grid(&spec.param_domain, &[9, 5])?;
    let mut config = GreedyConfig::new(training.clone(), EstimatorKind::Stable);
    config.n_max = 5;
    let est = StableEstimator::new(&op, &disc.gram, config.rank_tol, config.drop_tol)?;
    let out = greedy(&config, &op, &disc.gram, est)?;
    let riesz = out.estimator.riesz();
    let q_a = op.q_a();

    // Append the columns of ξ_1 once more; its coefficient is split in half
    // between the two copies so the residual is the same vector.
    let mut columns = riesz.l_whitened().to_vec();
    columns.extend_from_slice(&riesz.l_whitened()[..q_a]);
    let (clean, _) = stable_factors_from_columns(riesz.l_whitened(), riesz.c_whitened(), q_a, config.rank_tol, config.drop_tol)?;
    let (dup, _) = stable_factors_from_columns(&columns, riesz.c_whitened(), q_a, config.rank_tol, config.drop_tol)?;
    println!("rank clean {} of {}, duplicated {} of {}", clean.rank, clean.rzt.ncols(), dup.rank, dup.rzt.ncols());

    // Snapshot parameters are skipped: there the residual is at roundoff
    // level and carries no relative accuracy.
    for mu in training.iter().step_by(7).filter(|mu| !out.basis.contains(mu)) {
        let u = rb_solve(&out.model, &op, mu)?;
        let theta_a = op.theta_a(mu);
        let theta_f = op.theta_f(mu);
        let c = affine_coefficients(&theta_a, &u);
        let mut c_dup = DVector::zeros(columns.len());
        c_dup.rows_mut(0, c.len()).copy_from(&c);
        for q in 0..q_a {
            c_dup[q] *= 0.5;
            c_dup[c.len() + q] = c[q] * 0.5;
        }
        let a = clean.residual_norm(&theta_f, &c);
        let b = dup.residual_norm(&theta_f, &c_dup);
        println!("mu = ({:+.2}, {:+.2}): {a:.12e} vs {b:.12e}", mu[0], mu[1]);
        assert!((a - b).abs() <= 1e-10 * a);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
