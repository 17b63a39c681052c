//! Dense kernels shared by the truth solver, the reduced model and the
//! estimators: gram-weighted orthonormalization, rank-revealing QR with
//! column pivoting, complement projection, dense solves and the smallest
//! eigenvalue of a symmetrized operator.
//!
//! Everything here is a pure function of its inputs.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{RbError, Result};

/// Default relative threshold below which a projected snapshot is dropped.
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

/// Default relative diagonal threshold for the numerical rank of a pivoted QR.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Inner product of the truth space `X`.
///
/// The explicit variant keeps the lower Cholesky factor `L` of `G = L Lᵀ`, so
/// every `X`-norm reduces to a Euclidean norm of a transformed vector:
/// `‖v‖_X = ‖Lᵀ v‖` and, for functionals, `‖f‖_X' = ‖L⁻¹ f‖`.
#[derive(Clone, Debug, Default)]
pub enum GramSpec {
    #[default]
    Identity,
    Explicit(Arc<ExplicitGram>),
}

#[derive(Debug)]
pub struct ExplicitGram {
    matrix: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl GramSpec {
    pub fn identity() -> Self {
        GramSpec::Identity
    }

    /// Validates symmetry (1e-12 relative) and positive definiteness.
    pub fn explicit(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(RbError::InvalidGram(format!(
                "gram matrix must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(RbError::InvalidGram("non-finite entry".into()));
        }
        let scale = matrix.norm();
        let asym = (&matrix - matrix.transpose()).norm();
        if asym > 1e-12 * scale {
            return Err(RbError::InvalidGram(format!(
                "not symmetric: ‖G − Gᵀ‖/‖G‖ = {:e}",
                asym / scale
            )));
        }
        let chol = matrix
            .clone()
            .cholesky()
            .ok_or_else(|| RbError::InvalidGram("Cholesky factorization failed".into()))?
            .unpack();
        Ok(GramSpec::Explicit(Arc::new(ExplicitGram { matrix, chol })))
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, GramSpec::Identity)
    }

    /// Dimension fixed by an explicit gram, `None` for the identity.
    pub fn dim(&self) -> Option<usize> {
        match self {
            GramSpec::Identity => None,
            GramSpec::Explicit(g) => Some(g.matrix.nrows()),
        }
    }

    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            GramSpec::Identity => None,
            GramSpec::Explicit(g) => Some(&g.matrix),
        }
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != n => Err(RbError::invalid(format!(
                "gram dimension {d} does not match vector dimension {n}"
            ))),
            _ => Ok(()),
        }
    }

    /// `uᵀ G v`
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        match self {
            GramSpec::Identity => u.dot(v),
            GramSpec::Explicit(g) => u.dot(&(&g.matrix * v)),
        }
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.whiten(v).norm()
    }

    /// `Lᵀ v`, whose Euclidean norm is the `X`-norm of `v`.
    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            GramSpec::Identity => v.clone(),
            GramSpec::Explicit(g) => g.chol.tr_mul(v),
        }
    }

    /// Inverse of [`GramSpec::whiten`]: `L⁻ᵀ y`.
    pub fn unwhiten(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            GramSpec::Identity => y.clone(),
            GramSpec::Explicit(g) => {
                let mut x = y.clone();
                g.chol.tr_solve_lower_triangular_mut(&mut x);
                x
            }
        }
    }

    /// `L⁻¹ f` for a functional given by its coefficient vector `f`: the
    /// Euclidean norm of the result is the dual norm `‖f‖_X'`.
    pub fn dual_whiten(&self, f: &DVector<f64>) -> DVector<f64> {
        match self {
            GramSpec::Identity => f.clone(),
            GramSpec::Explicit(g) => {
                let mut x = f.clone();
                g.chol.solve_lower_triangular_mut(&mut x);
                x
            }
        }
    }

    /// Riesz representer `G⁻¹ f`.
    pub fn riesz(&self, f: &DVector<f64>) -> DVector<f64> {
        self.unwhiten(&self.dual_whiten(f))
    }
}

/// Output of [`orthonormalize`].
#[derive(Clone, Debug)]
pub struct Orthonormalized {
    pub basis: Vec<DVector<f64>>,
    /// `basis.len() × inputs` upper-trapezoidal coefficients; column `j`
    /// reproduces input `j` as `Σ_i coeffs[(i, j)] · basis[i]`.
    pub coeffs: DMatrix<f64>,
    pub kept: Vec<usize>,
}

/// One Gram–Schmidt step in a Euclidean (already whitened) space.
#[derive(Clone, Debug)]
pub(crate) struct GsStep {
    pub coeffs: Vec<f64>,
    /// `(norm after projection, normalized direction)` unless dropped.
    pub new_direction: Option<(f64, DVector<f64>)>,
}

/// Modified Gram–Schmidt against an orthonormal set with exactly one
/// re-orthogonalization pass.
pub(crate) fn gram_schmidt_step(basis: &[DVector<f64>], v: &DVector<f64>, drop_tol: f64) -> GsStep {
    let original = v.norm();
    let mut coeffs = vec![0.0; basis.len()];
    if original == 0.0 {
        return GsStep { coeffs, new_direction: None };
    }
    let mut w = v.clone();
    for _ in 0..2 {
        for (c, q) in coeffs.iter_mut().zip(basis) {
            let h = q.dot(&w);
            w.axpy(-h, q, 1.0);
            *c += h;
        }
    }
    let remaining = w.norm();
    if remaining < drop_tol * original || remaining == 0.0 {
        return GsStep { coeffs, new_direction: None };
    }
    w /= remaining;
    GsStep { coeffs, new_direction: Some((remaining, w)) }
}

pub(crate) fn ensure_finite_vec(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(RbError::invalid(format!("{what} has non-finite entries")))
    }
}

pub(crate) fn ensure_finite_mat(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(RbError::invalid(format!("{what} has non-finite entries")))
    }
}

/// Gram-orthonormalizes `vectors` in order.
///
/// A vector is dropped when its norm after projection onto the preceding
/// basis falls below `drop_tol` times its original norm.
pub fn orthonormalize(vectors: &[DVector<f64>], gram: &GramSpec, drop_tol: f64) -> Result<Orthonormalized> {
    if vectors.is_empty() {
        return Err(RbError::invalid("orthonormalize needs at least one vector"));
    }
    if !(drop_tol > 0.0) {
        return Err(RbError::invalid(format!("drop_tol must be positive, got {drop_tol}")));
    }
    let dim = vectors[0].len();
    gram.check_dim(dim)?;
    for v in vectors {
        if v.len() != dim {
            return Err(RbError::invalid("vectors have mismatched lengths"));
        }
        ensure_finite_vec(v, "input vector")?;
    }

    let mut whitened: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        let step = gram_schmidt_step(&whitened, &gram.whiten(v), drop_tol);
        let mut col = step.coeffs;
        if let Some((r, q)) = step.new_direction {
            col.push(r);
            whitened.push(q);
            kept.push(j);
        }
        columns.push(col);
    }

    let k = whitened.len();
    let mut coeffs = DMatrix::zeros(k, vectors.len());
    for (j, col) in columns.iter().enumerate() {
        for (i, &c) in col.iter().enumerate() {
            coeffs[(i, j)] = c;
        }
    }
    let basis = whitened.iter().map(|y| gram.unwhiten(y)).collect();
    Ok(Orthonormalized { basis, coeffs, kept })
}

/// Reduced column-pivoted QR: `B·Z = Q·R` with `Q` of `rank` orthonormal
/// columns.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    pub q: DMatrix<f64>,
    /// `rank × ncols(B)` upper trapezoidal, columns in pivoted order.
    pub r: DMatrix<f64>,
    /// Column `j` of `B·Z` is column `perm[j]` of `B`.
    pub perm: Vec<usize>,
    pub rank: usize,
}

impl PivotedQr {
    /// `R·Zᵀ`, i.e. `R` with its columns returned to the original order of `B`.
    pub fn r_unpermuted(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.r.nrows(), self.r.ncols());
        for (j, &p) in self.perm.iter().enumerate() {
            out.set_column(p, &self.r.column(j));
        }
        out
    }

    /// Original column indices that fell beyond the numerical rank.
    pub fn trailing_columns(&self) -> &[usize] {
        &self.perm[self.rank..]
    }
}

/// Householder QR with column pivoting, truncated at the numerical rank
/// (`|R_kk| > rank_tol_rel·|R_11|`).
pub fn pivoted_qr(b: &DMatrix<f64>, rank_tol_rel: f64) -> Result<PivotedQr> {
    if !(rank_tol_rel > 0.0 && rank_tol_rel < 1.0) {
        return Err(RbError::invalid(format!("rank_tol_rel must lie in (0, 1), got {rank_tol_rel}")));
    }
    ensure_finite_mat(b, "QR input")?;
    let (m, n) = b.shape();
    let mut a = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors: Vec<DVector<f64>> = Vec::new();
    let mut first_diag = 0.0;

    for j in 0..m.min(n) {
        // Exact trailing norms each step; m·n is small enough here that
        // norm downdating is not worth its bookkeeping.
        let (p, pivot_norm) = (j..n)
            .map(|c| (c, a.view((j, c), (m - j, 1)).norm()))
            .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if j == 0 {
            first_diag = pivot_norm;
        }
        if pivot_norm == 0.0 || pivot_norm <= rank_tol_rel * first_diag {
            break;
        }
        if p != j {
            a.swap_columns(j, p);
            perm.swap(j, p);
        }

        let x0 = a[(j, j)];
        let beta = if x0 >= 0.0 { -pivot_norm } else { pivot_norm };
        let mut v = a.view((j, j), (m - j, 1)).clone_owned().column(0).into_owned();
        v[0] = x0 - beta;
        let vtv = v.norm_squared();
        if vtv > 0.0 {
            for c in (j + 1)..n {
                let mut col = a.view_mut((j, c), (m - j, 1));
                let s = 2.0 * v.dot(&col.column(0)) / vtv;
                col.column_mut(0).axpy(-s, &v, 1.0);
            }
        }
        a[(j, j)] = beta;
        for i in (j + 1)..m {
            a[(i, j)] = 0.0;
        }
        reflectors.push(v);
    }

    let rank = reflectors.len();
    let mut r = DMatrix::zeros(rank, n);
    for i in 0..rank {
        for c in i..n {
            r[(i, c)] = a[(i, c)];
        }
    }
    let mut q = DMatrix::zeros(m, rank);
    for i in 0..rank {
        q[(i, i)] = 1.0;
    }
    for (j, v) in reflectors.iter().enumerate().rev() {
        let vtv = v.norm_squared();
        if vtv == 0.0 {
            continue;
        }
        for c in 0..rank {
            let mut col = q.view_mut((j, c), (m - j, 1));
            let s = 2.0 * v.dot(&col.column(0)) / vtv;
            col.column_mut(0).axpy(-s, v, 1.0);
        }
    }
    Ok(PivotedQr { q, r, perm, rank })
}

/// `(I − Q Qᵀ) v`
pub fn complement_project(q: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    if q.nrows() != v.len() {
        return Err(RbError::invalid(format!(
            "complement_project: Q has {} rows but v has length {}",
            q.nrows(),
            v.len()
        )));
    }
    if q.ncols() == 0 {
        return Ok(v.clone());
    }
    let coords = q.tr_mul(v);
    Ok(v - q * coords)
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve_dense(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(RbError::invalid(format!(
            "solve_dense: matrix {}x{} incompatible with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    let scale = a.amax();
    let lu = a.clone().lu();
    let pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    if !(pivot > f64::EPSILON * scale * n as f64) {
        return Err(RbError::Singular { pivot });
    }
    lu.solve(b).ok_or(RbError::Singular { pivot })
}

/// Minimum over `w` of `wᵀ·sym(A)·w / wᵀ·G·w`, with `sym(A) = (A + Aᵀ)/2`.
pub fn smallest_symmetric_eigenvalue(a: &DMatrix<f64>, gram: &GramSpec) -> Result<f64> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(RbError::invalid("smallest_symmetric_eigenvalue needs a nonempty square matrix"));
    }
    ensure_finite_mat(a, "operator")?;
    gram.check_dim(a.nrows())?;
    let sym = (a + a.transpose()) * 0.5;
    let pencil = match gram {
        GramSpec::Identity => sym,
        GramSpec::Explicit(g) => {
            // L⁻¹ S L⁻ᵀ, symmetrized again against rounding
            let mut t = sym;
            g.chol.solve_lower_triangular_mut(&mut t);
            let mut t = t.transpose();
            g.chol.solve_lower_triangular_mut(&mut t);
            (&t + t.transpose()) * 0.5
        }
    };
    let eig = SymmetricEigen::new(pencil);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
