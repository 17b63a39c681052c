use nalgebra::{DMatrix, DVector};

use super::riesz::RieszData;
use super::{affine_coefficients, check_alpha, EstimateValue};
use crate::error::{RbError, Result};
use crate::numerics::{complement_project, gram_schmidt_step, pivoted_qr};
use crate::truth::AffineOperator;

/// Online data of the QR-based residual evaluation.
///
/// With `𝓑 = [ℒ₁¹ … ℒ_N^{Q_a}]` and `𝓑𝓩 = 𝓠𝓡`, the residual splits into its
/// component in `range(𝓠)` and its orthogonal complement, and the norm is
/// the root of the sum of the two squared norms. Neither part is squared and
/// differenced, so the value keeps full relative accuracy down to roundoff
/// of the individual vectors.
///
/// Columns of `𝓑` beyond the numerical rank (`trailing`) still carry a small
/// component outside `range(𝓠)`. That component is kept in the complement
/// basis `W` along with the projected load representers, so truncating the
/// rank never changes the computed norm.
#[derive(Clone, Debug)]
pub struct StableFactors {
    pub q_a: usize,
    pub q_f: usize,
    pub n: usize,
    pub rank: usize,
    pub perm: Vec<usize>,
    /// `𝓠ᵀ𝒞^q̃`, `rank × Q_f`
    pub qt_c: DMatrix<f64>,
    /// `𝓡𝓩ᵀ`, `rank × N·Q_a`
    pub rzt: DMatrix<f64>,
    /// Coordinates of `(I − 𝓠𝓠ᵀ)𝒞^q̃` in `W`, `dim W × Q_f`.
    pub w_coords: DMatrix<f64>,
    /// Columns of `𝓑` beyond the numerical rank.
    pub trailing: Vec<usize>,
    /// Coordinates of `(I − 𝓠𝓠ᵀ)ℒ_j` in `W` for each trailing column.
    pub wt_trailing: DMatrix<f64>,
}

/// The `𝒩`-sized offline bases, kept only for diagnostics.
#[derive(Clone, Debug)]
pub struct StableBases {
    pub q: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

impl StableFactors {
    pub fn complement_dim(&self) -> usize {
        self.w_coords.nrows()
    }

    /// The two orthogonal residual parts in coordinates: `(complement, range)`.
    pub fn residual_parts(&self, theta_f: &[f64], coeffs: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let theta_f = DVector::from_column_slice(theta_f);
        let range = &self.qt_c * &theta_f - &self.rzt * coeffs;
        let mut complement = &self.w_coords * &theta_f;
        for (k, &j) in self.trailing.iter().enumerate() {
            complement.axpy(-coeffs[j], &self.wt_trailing.column(k), 1.0);
        }
        (complement, range)
    }

    /// `‖Σ θ_f^q̃ 𝒞^q̃ − Σ c_j 𝓑_j‖_X`
    pub fn residual_norm(&self, theta_f: &[f64], coeffs: &DVector<f64>) -> f64 {
        let (complement, range) = self.residual_parts(theta_f, coeffs);
        complement.norm().hypot(range.norm())
    }
}

pub fn build_stable_factors(riesz: &RieszData, rank_tol: f64, drop_tol: f64) -> Result<StableFactors> {
    Ok(build_stable_factors_with_bases(riesz, rank_tol, drop_tol)?.0)
}

pub fn build_stable_factors_with_bases(
    riesz: &RieszData,
    rank_tol: f64,
    drop_tol: f64,
) -> Result<(StableFactors, StableBases)> {
    stable_factors_from_columns(riesz.l_whitened(), riesz.c_whitened(), riesz.q_a(), rank_tol, drop_tol)
}

/// Factors for an arbitrary column set `𝓑` (whitened representers) and load
/// representers. `q_a` only sets the reported `N = cols / q_a`.
pub fn stable_factors_from_columns(
    columns: &[DVector<f64>],
    loads: &[DVector<f64>],
    q_a: usize,
    rank_tol: f64,
    drop_tol: f64,
) -> Result<(StableFactors, StableBases)> {
    let dim = loads
        .first()
        .ok_or_else(|| RbError::invalid("at least one load representer is required"))?
        .len();
    if q_a == 0 || !columns.len().is_multiple_of(q_a) {
        return Err(RbError::invalid("column count must be a multiple of Q_a"));
    }
    let b = if columns.is_empty() { DMatrix::zeros(dim, 0) } else { DMatrix::from_columns(columns) };
    let qr = pivoted_qr(&b, rank_tol)?;
    let q = &qr.q;

    let project = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let once = complement_project(q, v)?;
        complement_project(q, &once)
    };
    let projected_loads = loads.iter().map(project).collect::<Result<Vec<_>>>()?;
    let trailing = qr.trailing_columns().to_vec();
    let projected_trailing = trailing.iter().map(|&j| project(&columns[j])).collect::<Result<Vec<_>>>()?;

    // Load components are dropped relative to the load itself. Trailing
    // columns are already below the rank tolerance, so they are kept down to
    // roundoff; their small complement parts are what keep the norm exact.
    let thresholds = loads
        .iter()
        .map(|c| drop_tol * c.norm())
        .chain(trailing.iter().map(|&j| f64::EPSILON * columns[j].norm()));
    let mut w: Vec<DVector<f64>> = Vec::new();
    for (v, threshold) in projected_loads.iter().chain(&projected_trailing).zip(thresholds) {
        if let Some((norm, dir)) = gram_schmidt_step(&w, v, 0.0).new_direction {
            if norm > threshold {
                w.push(dir);
            }
        }
    }
    let w_mat = if w.is_empty() { DMatrix::zeros(dim, 0) } else { DMatrix::from_columns(&w) };

    let coords = |vs: &[DVector<f64>]| DMatrix::from_fn(w.len(), vs.len(), |i, j| w[i].dot(&vs[j]));
    let qt_c = DMatrix::from_fn(qr.rank, loads.len(), |i, j| q.column(i).dot(&loads[j]));
    let factors = StableFactors {
        q_a,
        q_f: loads.len(),
        n: columns.len() / q_a,
        rank: qr.rank,
        rzt: qr.r_unpermuted(),
        perm: qr.perm.clone(),
        qt_c,
        w_coords: coords(&projected_loads),
        wt_trailing: coords(&projected_trailing),
        trailing,
    };
    Ok((factors, StableBases { q: qr.q, w: w_mat }))
}

/// Residual-based estimate with the norm evaluated by the QR split.
pub fn estimator_stable(
    factors: &StableFactors,
    op: &AffineOperator,
    mu: &[f64],
    u_hat: &DVector<f64>,
    alpha_lb: f64,
) -> Result<EstimateValue> {
    check_alpha(alpha_lb)?;
    if u_hat.len() != factors.n {
        return Err(RbError::invalid(format!(
            "coefficient vector has length {}, factors built for N = {}",
            u_hat.len(),
            factors.n
        )));
    }
    let coeffs = affine_coefficients(&op.theta_a(mu), u_hat);
    let norm = factors.residual_norm(&op.theta_f(mu), &coeffs);
    Ok(EstimateValue { value: norm / alpha_lb, clamped: false, alpha_used: alpha_lb })
}
