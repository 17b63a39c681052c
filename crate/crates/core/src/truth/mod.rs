//! Truth discretization: Chebyshev collocation on `[−1, 1]²` with homogeneous
//! Dirichlet data, and the affine operators of the four benchmark problems.

mod chebyshev;
mod problems;

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{RbError, Result};
use crate::numerics::{solve_dense, GramSpec};

pub use chebyshev::chebyshev_grid;
pub use problems::{assemble_affine, ProblemKind, ProblemSpec};

/// A point of the parameter domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamPoint(pub Vec<f64>);

impl ParamPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        ParamPoint(coords.into())
    }
}

impl Deref for ParamPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamPoint {
    fn from(v: Vec<f64>) -> Self {
        ParamPoint(v)
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Collocation grid and 1-D differentiation matrices.
#[derive(Clone, Debug)]
pub struct TruthDiscretization {
    pub nodes_per_dim: usize,
    /// All 1-D nodes, boundary included, descending.
    pub nodes: DVector<f64>,
    pub diff1: DMatrix<f64>,
    pub diff2: DMatrix<f64>,
    pub gram: GramSpec,
}

impl TruthDiscretization {
    /// `nodes_per_dim` counts the boundary nodes, so the truth dimension is
    /// `(nodes_per_dim − 2)²`.
    pub fn new(nodes_per_dim: usize) -> Result<Self> {
        Self::with_gram(nodes_per_dim, GramSpec::Identity)
    }

    pub fn with_gram(nodes_per_dim: usize, gram: GramSpec) -> Result<Self> {
        if nodes_per_dim < 3 {
            return Err(RbError::invalid(format!(
                "need at least 3 nodes per direction, got {nodes_per_dim}"
            )));
        }
        let (nodes, diff1) = chebyshev_grid(nodes_per_dim - 1)?;
        let diff2 = &diff1 * &diff1;
        let disc = TruthDiscretization { nodes_per_dim, nodes, diff1, diff2, gram };
        disc.gram.check_dim(disc.interior_dim())?;
        Ok(disc)
    }

    pub fn interior_per_dim(&self) -> usize {
        self.nodes_per_dim - 2
    }

    pub fn interior_dim(&self) -> usize {
        self.interior_per_dim().pow(2)
    }

    /// Solution-vector index of interior node `(ix, iy)`; `x` runs fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + self.interior_per_dim() * iy
    }

    pub fn grid_position(&self, k: usize) -> (usize, usize) {
        let m = self.interior_per_dim();
        (k % m, k / m)
    }

    /// Physical coordinates of interior unknown `k`.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (ix, iy) = self.grid_position(k);
        (self.nodes[ix + 1], self.nodes[iy + 1])
    }

    /// Second-derivative matrix restricted to interior rows and columns.
    pub fn interior_diff2(&self) -> DMatrix<f64> {
        let m = self.interior_per_dim();
        self.diff2.view((1, 1), (m, m)).into_owned()
    }

    /// Samples `g(x, y)` at the interior nodes.
    pub fn sample(&self, g: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        DVector::from_fn(self.interior_dim(), |k, _| {
            let (x, y) = self.coords(k);
            g(x, y)
        })
    }

    /// Embeds interior values into the full `nodes_per_dim²` grid with zeros
    /// on the boundary (row index = y node, column index = x node).
    pub fn extend_by_zero(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let n = self.nodes_per_dim;
        let mut full = DMatrix::zeros(n, n);
        for k in 0..values.len() {
            let (ix, iy) = self.grid_position(k);
            full[(iy + 1, ix + 1)] = values[k];
        }
        full
    }
}

pub type ThetaFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Affine operator `A(μ) = Σ θ_a^q(μ) A^q` and load `f(μ) = Σ θ_f^q(μ) f^q`.
///
/// The bilinear form is `a(w, v; μ) = vᵀ A(μ) w` and the load functional is
/// `f(v; μ) = vᵀ f(μ)`.
#[derive(Clone)]
pub struct AffineOperator {
    pub a_components: Vec<DMatrix<f64>>,
    pub f_components: Vec<DVector<f64>>,
    theta_a: ThetaFn,
    theta_f: ThetaFn,
    param_dim: usize,
}

impl fmt::Debug for AffineOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineOperator")
            .field("dim", &self.dim())
            .field("q_a", &self.q_a())
            .field("q_f", &self.q_f())
            .field("param_dim", &self.param_dim)
            .finish()
    }
}

impl AffineOperator {
    pub fn new(
        a_components: Vec<DMatrix<f64>>,
        f_components: Vec<DVector<f64>>,
        theta_a: ThetaFn,
        theta_f: ThetaFn,
        param_dim: usize,
    ) -> Result<Self> {
        let dim = a_components
            .first()
            .ok_or_else(|| RbError::invalid("affine operator needs at least one matrix component"))?
            .nrows();
        if f_components.is_empty() {
            return Err(RbError::invalid("affine operator needs at least one load component"));
        }
        if a_components.iter().any(|a| a.shape() != (dim, dim)) {
            return Err(RbError::invalid("matrix components must all be square of equal size"));
        }
        if f_components.iter().any(|f| f.len() != dim) {
            return Err(RbError::invalid("load components must match the operator dimension"));
        }
        Ok(AffineOperator { a_components, f_components, theta_a, theta_f, param_dim })
    }

    pub fn dim(&self) -> usize {
        self.a_components[0].nrows()
    }

    pub fn q_a(&self) -> usize {
        self.a_components.len()
    }

    pub fn q_f(&self) -> usize {
        self.f_components.len()
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn theta_a(&self, mu: &[f64]) -> Vec<f64> {
        (self.theta_a)(mu)
    }

    pub fn theta_f(&self, mu: &[f64]) -> Vec<f64> {
        (self.theta_f)(mu)
    }

    pub fn matrix(&self, mu: &[f64]) -> DMatrix<f64> {
        let theta = self.theta_a(mu);
        let mut a = DMatrix::zeros(self.dim(), self.dim());
        for (t, comp) in theta.iter().zip(&self.a_components) {
            a.zip_apply(comp, |x, y| *x += t * y);
        }
        a
    }

    pub fn load(&self, mu: &[f64]) -> DVector<f64> {
        let theta = self.theta_f(mu);
        let mut f = DVector::zeros(self.dim());
        for (t, comp) in theta.iter().zip(&self.f_components) {
            f.axpy(*t, comp, 1.0);
        }
        f
    }

    /// Copy with every load component multiplied by `s`.
    pub fn with_scaled_load(&self, s: f64) -> Self {
        let mut out = self.clone();
        for f in &mut out.f_components {
            *f *= s;
        }
        out
    }

    pub(crate) fn check_mu(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.param_dim {
            return Err(RbError::invalid(format!(
                "parameter has {} coordinates, operator expects {}",
                mu.len(),
                self.param_dim
            )));
        }
        if mu.iter().any(|c| !c.is_finite()) {
            return Err(RbError::invalid("parameter has non-finite coordinates"));
        }
        Ok(())
    }
}

/// Truth solution at one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub mu: ParamPoint,
    pub values: DVector<f64>,
}

pub fn truth_solve(op: &AffineOperator, mu: &ParamPoint) -> Result<Snapshot> {
    op.check_mu(mu)?;
    let values = solve_dense(&op.matrix(mu), &op.load(mu))?;
    Ok(Snapshot { mu: mu.clone(), values })
}

/// `‖u_truth − u_rb‖_X`
pub fn true_error(u_truth: &Snapshot, u_rb: &DVector<f64>, gram: &GramSpec) -> Result<f64> {
    if u_truth.values.len() != u_rb.len() {
        return Err(RbError::invalid("true_error: dimension mismatch"));
    }
    Ok(gram.norm(&(&u_truth.values - u_rb)))
}
