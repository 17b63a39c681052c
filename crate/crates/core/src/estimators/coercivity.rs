use serde::{Deserialize, Serialize};

use crate::error::{RbError, Result};
use crate::numerics::{smallest_symmetric_eigenvalue, GramSpec};
use crate::truth::AffineOperator;

/// Default floor for the exact-eigenvalue coercivity bound.
pub const DEFAULT_ALPHA_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMode {
    /// `α_LB ≡ 1`: the estimator is the plain residual dual norm.
    #[default]
    Unit,
    /// Smallest eigenvalue of the symmetrized truth operator in the gram
    /// inner product. Costs one dense symmetric eigensolve per parameter.
    ExactEig,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoercivityBound {
    pub value: f64,
    /// The eigenvalue fell below the floor and the floor was returned.
    pub degenerate: bool,
}

pub fn coercivity_lower_bound(
    op: &AffineOperator,
    mu: &[f64],
    mode: AlphaMode,
    gram: &GramSpec,
    floor: f64,
) -> Result<CoercivityBound> {
    op.check_mu(mu)?;
    match mode {
        AlphaMode::Unit => Ok(CoercivityBound { value: 1.0, degenerate: false }),
        AlphaMode::ExactEig => {
            if !(floor > 0.0) {
                return Err(RbError::invalid(format!("coercivity floor must be positive, got {floor}")));
            }
            let lambda = smallest_symmetric_eigenvalue(&op.matrix(mu), gram)?;
            if lambda < floor {
                Ok(CoercivityBound { value: floor, degenerate: true })
            } else {
                Ok(CoercivityBound { value: lambda, degenerate: false })
            }
        }
    }
}
