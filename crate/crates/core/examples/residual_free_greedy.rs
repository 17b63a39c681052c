// Greedy selection by the Lebesgue function of the reduced Lagrange basis,
// which needs no residual data, compared with the stabilized residual
// estimator through true errors on the training grid.

use rbm_core::harness::{make_training_grid, validate};
use rbm_core::truth::{assemble_affine, ProblemKind, ProblemSpec, TruthDiscretization};
use rbm_core::{greedy, EstimatorKind, EstimatorState, GreedyConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ProblemSpec::new(ProblemKind::TwodFirst);
    let disc = TruthDiscretization::new(14)?;
    let op = assemble_affine(&spec, &disc)?;
    let training = make_training_grid(&spec.param_domain, &[17, 9])?;

    for kind in [EstimatorKind::Lebesgue, EstimatorKind::Stable] {
        let mut config = GreedyConfig::new(training.clone(), kind);
        config.n_max = 12;
        let estimator = EstimatorState::new(kind, &op, &disc.gram, config.rank_tol, config.drop_tol)?;
        let out = greedy(&config, &op, &disc.gram, estimator)?;
        let errors = validate(&out.basis, &out.model, &op, &training, &disc.gram, 1)?;
        let max = errors.iter().filter_map(|(_, e)| *e).fold(0.0, f64::max);
        println!("{kind:<9} N = {:>2}  max true error {max:.3e}", out.basis.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
