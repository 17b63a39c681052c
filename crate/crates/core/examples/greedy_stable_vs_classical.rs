// Greedy histories driven by the classical expanded estimator and by the
// QR-stabilized one. They agree while the residual is large; the classical
// one then stalls near the square root of machine precision.

use rbm_core::harness::make_training_grid;
use rbm_core::truth::{assemble_affine, ProblemKind, ProblemSpec, TruthDiscretization};
use rbm_core::{greedy, EstimatorKind, EstimatorState, GreedyConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ProblemSpec::new(ProblemKind::OnedContinuous);
    let disc = TruthDiscretization::new(20)?;
    let op = assemble_affine(&spec, &disc)?;
    let training = make_training_grid(&spec.param_domain, &[64])?;

    let mut histories = Vec::new();
    for kind in [EstimatorKind::Classical, EstimatorKind::Stable] {
        let mut config = GreedyConfig::new(training.clone(), kind);
        config.n_max = 24;
        let estimator = EstimatorState::new(kind, &op, &disc.gram, config.rank_tol, config.drop_tol)?;
        let outcome = greedy(&config, &op, &disc.gram, estimator)?;
        println!("{kind}: N = {} ({})", outcome.basis.len(), outcome.history.termination.label());
        histories.push(outcome.history.estimates());
    }
    println!("{:>3} {:>12} {:>12}", "n", "classical", "stable");
    for (n, (c, s)) in histories[0].iter().zip(&histories[1]).enumerate() {
        println!("{:>3} {:>12.3e} {:>12.3e}", n + 1, c, s);
    }
    let floor = |h: &[f64]| h.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("smallest recorded: classical {:.1e}, stable {:.1e}", floor(&histories[0]), floor(&histories[1]));
    assert!(floor(&histories[1]) < floor(&histories[0]));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
