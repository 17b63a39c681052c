use nalgebra::DVector;

use super::EstimateValue;

/// `Σ |c_m|`: the Lebesgue function of the snapshot interpolation at the
/// parameter whose Lagrange coefficients are `c`. Needs no residual data.
pub fn estimator_lebesgue(c: &DVector<f64>) -> EstimateValue {
    EstimateValue { value: c.lp_norm(1), clamped: false, alpha_used: 1.0 }
}
