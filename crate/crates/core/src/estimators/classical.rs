use nalgebra::DVector;

use super::riesz::ResidualTables;
use super::{affine_coefficients, check_alpha, EstimateValue};
use crate::error::{RbError, Result};
use crate::truth::AffineOperator;

/// Residual dual norm through the expanded quadratic
/// `Σ θ_f θ_f (𝒞,𝒞) + Σ c c (ℒ,ℒ) − 2 Σ θ_f c (𝒞,ℒ)`.
///
/// Subject to cancellation: once the true norm drops below roughly
/// `√ε` times the size of the individual terms, the value stagnates, and the
/// quadratic can even go negative. Negative values are clamped to zero and
/// flagged.
pub fn estimator_classical(
    tables: &ResidualTables,
    op: &AffineOperator,
    mu: &[f64],
    u_hat: &DVector<f64>,
    alpha_lb: f64,
) -> Result<EstimateValue> {
    check_alpha(alpha_lb)?;
    if u_hat.len() != tables.n {
        return Err(RbError::invalid(format!(
            "coefficient vector has length {}, tables built for N = {}",
            u_hat.len(),
            tables.n
        )));
    }
    let theta_f = DVector::from_vec(op.theta_f(mu));
    let coeffs = affine_coefficients(&op.theta_a(mu), u_hat);

    let load_term = theta_f.dot(&(&tables.cc * &theta_f));
    let operator_term = coeffs.dot(&(&tables.ll * &coeffs));
    let cross_term = theta_f.dot(&(&tables.cl * &coeffs));
    let quadratic = load_term + operator_term - 2.0 * cross_term;

    let clamped = quadratic < 0.0;
    Ok(EstimateValue { value: quadratic.max(0.0).sqrt() / alpha_lb, clamped, alpha_used: alpha_lb })
}
