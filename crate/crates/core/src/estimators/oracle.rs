use nalgebra::DVector;

use crate::error::{RbError, Result};
use crate::numerics::GramSpec;
use crate::rbm::{reconstruct, ReducedBasis};
use crate::truth::AffineOperator;

/// Dual norm of `f(μ) − A(μ)Ξû`, computed directly in the truth space.
///
/// Costs one `𝒩 × 𝒩` assembly; meant as a reference for testing the online
/// estimators.
pub fn residual_norm_oracle(
    op: &AffineOperator,
    basis: &ReducedBasis,
    mu: &[f64],
    u_hat: &DVector<f64>,
    gram: &GramSpec,
) -> Result<f64> {
    op.check_mu(mu)?;
    gram.check_dim(op.dim())?;
    let residual = if basis.is_empty() {
        if !u_hat.is_empty() {
            return Err(RbError::invalid("nonempty coefficients for an empty basis"));
        }
        op.load(mu)
    } else {
        let u = reconstruct(basis, u_hat)?;
        op.load(mu) - op.matrix(mu) * u
    };
    Ok(gram.dual_whiten(&residual).norm())
}
