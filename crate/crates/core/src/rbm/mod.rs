//! Reduced-basis machinery: hierarchical orthonormal basis, parameter-independent
//! reduced blocks, Galerkin reduced solves and Lagrange-coefficient recovery.

mod greedy;

use nalgebra::{DMatrix, DVector};

use crate::error::{RbError, Result};
use crate::numerics::{gram_schmidt_step, solve_dense, GramSpec};
use crate::truth::{AffineOperator, ParamPoint, Snapshot};

pub use crate::estimators::AlphaMode;
pub use greedy::{
    greedy, greedy_with_observer, GreedyConfig, GreedyHistory, GreedyOutcome, GreedyRecord, SweepView, Termination,
};

/// Condition estimate of the change-of-basis factor above which Lagrange
/// coefficients carry a warning.
pub const LAGRANGE_CONDITION_WARNING: f64 = 1e12;

/// Relative norm below which a new snapshot counts as dependent during the
/// greedy. Much smaller than the generic orthonormalization tolerance: the
/// greedy must keep adding snapshots whose new content is far below `1e-10`
/// to resolve errors near machine precision.
pub const DEFAULT_SNAPSHOT_DROP_TOL: f64 = 1e-14;

/// Orthonormal basis `ξ₁…ξ_N` of the snapshot span, with the triangular factor
/// `R_s` such that `snapshots = Ξ·R_s`.
#[derive(Clone, Debug)]
pub struct ReducedBasis {
    gram: GramSpec,
    drop_tol: f64,
    sample_set: Vec<ParamPoint>,
    snapshots: Vec<DVector<f64>>,
    xi: Vec<DVector<f64>>,
    xi_whitened: Vec<DVector<f64>>,
    change_of_basis: DMatrix<f64>,
    condition: f64,
}

impl ReducedBasis {
    pub fn new(gram: GramSpec, drop_tol: f64) -> Self {
        ReducedBasis {
            gram,
            drop_tol,
            sample_set: Vec::new(),
            snapshots: Vec::new(),
            xi: Vec::new(),
            xi_whitened: Vec::new(),
            change_of_basis: DMatrix::zeros(0, 0),
            condition: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn gram(&self) -> &GramSpec {
        &self.gram
    }

    pub fn sample_set(&self) -> &[ParamPoint] {
        &self.sample_set
    }

    pub fn snapshots(&self) -> &[DVector<f64>] {
        &self.snapshots
    }

    pub fn xi(&self) -> &[DVector<f64>] {
        &self.xi
    }

    /// `R_s`, upper triangular.
    pub fn change_of_basis(&self) -> &DMatrix<f64> {
        &self.change_of_basis
    }

    /// `σ_max / σ_min` of `R_s`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        self.sample_set.iter().any(|s| s.0.as_slice() == mu)
    }

    /// The first `n` basis vectors; identical to the basis after `n` extensions.
    pub fn truncated(&self, n: usize) -> ReducedBasis {
        let n = n.min(self.len());
        let change_of_basis = self.change_of_basis.view((0, 0), (n, n)).into_owned();
        ReducedBasis {
            gram: self.gram.clone(),
            drop_tol: self.drop_tol,
            sample_set: self.sample_set[..n].to_vec(),
            snapshots: self.snapshots[..n].to_vec(),
            xi: self.xi[..n].to_vec(),
            xi_whitened: self.xi_whitened[..n].to_vec(),
            condition: condition_number(&change_of_basis),
            change_of_basis,
        }
    }
}

fn condition_number(r: &DMatrix<f64>) -> f64 {
    if r.is_empty() {
        return 1.0;
    }
    let s = r.clone().singular_values();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        s.max() / min
    }
}

/// Parameter-independent reduced blocks: `a_blocks[q][(i, j)] = a^q(ξ_j, ξ_i)`
/// and `f_blocks[q][i] = f^q(ξ_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedModel {
    pub a_blocks: Vec<DMatrix<f64>>,
    pub f_blocks: Vec<DVector<f64>>,
}

impl ReducedModel {
    pub fn new(op: &AffineOperator) -> Self {
        ReducedModel {
            a_blocks: vec![DMatrix::zeros(0, 0); op.q_a()],
            f_blocks: vec![DVector::zeros(0); op.q_f()],
        }
    }

    pub fn dim(&self) -> usize {
        self.f_blocks.first().map_or(0, |f| f.len())
    }

    pub fn truncated(&self, n: usize) -> ReducedModel {
        let n = n.min(self.dim());
        ReducedModel {
            a_blocks: self.a_blocks.iter().map(|a| a.view((0, 0), (n, n)).into_owned()).collect(),
            f_blocks: self.f_blocks.iter().map(|f| f.rows(0, n).into_owned()).collect(),
        }
    }

    /// Reduced matrix and right-hand side at `mu`.
    pub fn system(&self, op: &AffineOperator, mu: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for (t, block) in op.theta_a(mu).iter().zip(&self.a_blocks) {
            a.zip_apply(block, |x, y| *x += t * y);
        }
        let mut f = DVector::zeros(n);
        for (t, block) in op.theta_f(mu).iter().zip(&self.f_blocks) {
            f.axpy(*t, block, 1.0);
        }
        (a, f)
    }
}

/// Adds one snapshot: appends `ξ_{N+1}` and grows every block by one row and
/// column. Existing entries are untouched; on error nothing changes.
pub fn extend_basis(
    basis: &mut ReducedBasis,
    model: &mut ReducedModel,
    snapshot: Snapshot,
    op: &AffineOperator,
) -> Result<()> {
    if snapshot.values.len() != op.dim() {
        return Err(RbError::invalid("snapshot dimension does not match the operator"));
    }
    if model.dim() != basis.len() || model.a_blocks.len() != op.q_a() || model.f_blocks.len() != op.q_f() {
        return Err(RbError::invalid("reduced model out of sync with basis or operator"));
    }
    crate::numerics::ensure_finite_vec(&snapshot.values, "snapshot")?;
    let step = gram_schmidt_step(&basis.xi_whitened, &basis.gram.whiten(&snapshot.values), basis.drop_tol);
    let Some((norm, direction)) = step.new_direction else {
        return Err(RbError::DependentSnapshot { mu: snapshot.mu.0.clone() });
    };
    if basis.contains(&snapshot.mu) {
        return Err(RbError::invalid(format!("parameter {} is already in the sample set", snapshot.mu)));
    }

    let n = basis.len();
    let xi_new = basis.gram.unwhiten(&direction);

    for (a_block, a_q) in model.a_blocks.iter_mut().zip(&op.a_components) {
        let a_xi = a_q * &xi_new;
        let at_xi = a_q.tr_mul(&xi_new);
        let grown = std::mem::replace(a_block, DMatrix::zeros(0, 0)).resize(n + 1, n + 1, 0.0);
        *a_block = grown;
        for (j, xi_j) in basis.xi.iter().enumerate() {
            a_block[(n, j)] = at_xi.dot(xi_j);
            a_block[(j, n)] = xi_j.dot(&a_xi);
        }
        a_block[(n, n)] = xi_new.dot(&a_xi);
    }
    for (f_block, f_q) in model.f_blocks.iter_mut().zip(&op.f_components) {
        let grown = std::mem::replace(f_block, DVector::zeros(0)).resize_vertically(n + 1, 0.0);
        *f_block = grown;
        f_block[n] = xi_new.dot(f_q);
    }

    let mut r = std::mem::replace(&mut basis.change_of_basis, DMatrix::zeros(0, 0)).resize(n + 1, n + 1, 0.0);
    for (i, c) in step.coeffs.iter().enumerate() {
        r[(i, n)] = *c;
    }
    r[(n, n)] = norm;
    basis.condition = condition_number(&r);
    basis.change_of_basis = r;
    basis.xi.push(xi_new);
    basis.xi_whitened.push(direction);
    basis.sample_set.push(snapshot.mu);
    basis.snapshots.push(snapshot.values);
    Ok(())
}

/// Galerkin reduced solve in the orthonormal basis.
pub fn rb_solve(model: &ReducedModel, op: &AffineOperator, mu: &[f64]) -> Result<DVector<f64>> {
    if model.dim() == 0 {
        return Err(RbError::invalid("rb_solve on an empty reduced model"));
    }
    op.check_mu(mu)?;
    let (a, f) = model.system(op, mu);
    solve_dense(&a, &f)
}

/// `Ξ·û`
pub fn reconstruct(basis: &ReducedBasis, u_hat: &DVector<f64>) -> Result<DVector<f64>> {
    if u_hat.len() != basis.len() {
        return Err(RbError::invalid(format!(
            "coefficient vector has length {}, basis has {} vectors",
            u_hat.len(),
            basis.len()
        )));
    }
    let dim = basis.xi.first().map_or(0, |x| x.len());
    let mut out = DVector::zeros(dim);
    for (c, xi) in u_hat.iter().zip(&basis.xi) {
        out.axpy(*c, xi, 1.0);
    }
    Ok(out)
}

/// Snapshot-basis coefficients `c = R_s⁻¹ û`, i.e. the values of the
/// cardinal Lagrange functions at the parameter that produced `û`.
#[derive(Clone, Debug)]
pub struct LagrangeCoefficients {
    pub values: DVector<f64>,
    pub condition: f64,
    /// Set when the condition estimate exceeds [`LAGRANGE_CONDITION_WARNING`].
    pub ill_conditioned: bool,
}

pub fn lagrange_coefficients(basis: &ReducedBasis, u_hat: &DVector<f64>) -> Result<LagrangeCoefficients> {
    if u_hat.len() != basis.len() {
        return Err(RbError::invalid("lagrange_coefficients: dimension mismatch"));
    }
    let values = basis
        .change_of_basis
        .solve_upper_triangular(u_hat)
        .ok_or(RbError::Singular { pivot: 0.0 })?;
    Ok(LagrangeCoefficients {
        values,
        condition: basis.condition,
        ill_conditioned: basis.condition > LAGRANGE_CONDITION_WARNING,
    })
}
