// Truth solves for the four model problems on a Chebyshev collocation grid,
// with the algebraic residual of each solution.

use rbm_core::truth::{assemble_affine, truth_solve, ParamPoint, ProblemKind, ProblemSpec, TruthDiscretization};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let disc = TruthDiscretization::new(24)?;
    for kind in ProblemKind::ALL {
        let spec = ProblemSpec::new(kind);
        let op = assemble_affine(&spec, &disc)?;
        // Midpoint of the parameter box.
        let mu = ParamPoint::new(spec.param_domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect::<Vec<_>>());
        let u = truth_solve(&op, &mu)?;
        let residual = (op.matrix(&mu) * &u.values - op.load(&mu)).amax();
        println!(
            "{kind:<20} dim {:>4}  Q_a {}  Q_f {}  |u|_max {:.3e}  residual {:.1e}",
            op.dim(),
            op.q_a(),
            op.q_f(),
            u.values.amax(),
            residual
        );
        assert!(residual < 1e-8 * (1.0 + u.values.amax()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
