use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{AffineOperator, TruthDiscretization};
use crate::error::{RbError, Result};

/// The four benchmark problems, all posed on `[−1, 1]²` with `u = 0` on the
/// boundary:
///
/// * `oned-continuous`: `(1 + μx) u_xx + u_yy = e^{4xy}`, `μ ∈ [−0.995, 0.995]`
/// * `oned-discontinuous`: as above with `μ` replaced by
///   `ℓ(μ) = sin((μ − sign μ) π/2)`
/// * `twod-first`: `−u_xx − μ₁ u_yy − μ₂ u = −10 sin(8x(y − 1))`,
///   `μ ∈ [0.1, 4] × [0, 2]`
/// * `twod-second`: `(1 + μ₁x) u_xx + (1 + μ₂y) u_yy = e^{4xy}`,
///   `μ ∈ [−0.99, 0.99]²`
///
/// Equations written with a negative-definite principal part are assembled
/// with both sides negated, so every bilinear form is positive; solutions are
/// unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    OnedContinuous,
    OnedDiscontinuous,
    TwodFirst,
    TwodSecond,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::OnedContinuous,
        ProblemKind::OnedDiscontinuous,
        ProblemKind::TwodFirst,
        ProblemKind::TwodSecond,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::OnedContinuous => "oned-continuous",
            ProblemKind::OnedDiscontinuous => "oned-discontinuous",
            ProblemKind::TwodFirst => "twod-first",
            ProblemKind::TwodSecond => "twod-second",
        }
    }

    pub fn param_dim(self) -> usize {
        match self {
            ProblemKind::OnedContinuous | ProblemKind::OnedDiscontinuous => 1,
            ProblemKind::TwodFirst | ProblemKind::TwodSecond => 2,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = RbError;
    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RbError::Config(format!("unknown problem '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub param_domain: Vec<(f64, f64)>,
    pub q_a: usize,
    pub q_f: usize,
    /// Value taken for `sign(0)` in `ℓ(μ)`.
    pub sign_at_zero: f64,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind) -> Self {
        let (param_domain, q_a) = match kind {
            ProblemKind::OnedContinuous | ProblemKind::OnedDiscontinuous => (vec![(-0.995, 0.995)], 2),
            ProblemKind::TwodFirst => (vec![(0.1, 4.0), (0.0, 2.0)], 3),
            ProblemKind::TwodSecond => (vec![(-0.99, 0.99), (-0.99, 0.99)], 3),
        };
        ProblemSpec { kind, param_domain, q_a, q_f: 1, sign_at_zero: 1.0 }
    }

    pub fn with_sign_at_zero(mut self, s: f64) -> Self {
        self.sign_at_zero = s;
        self
    }

    pub fn param_dim(&self) -> usize {
        self.param_domain.len()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.param_dim()
            && mu.iter().zip(&self.param_domain).all(|(c, (lo, hi))| *c >= *lo && *c <= *hi)
    }

    pub fn theta_a(&self, mu: &[f64]) -> Vec<f64> {
        match self.kind {
            ProblemKind::OnedContinuous => vec![1.0, mu[0]],
            ProblemKind::OnedDiscontinuous => vec![1.0, discontinuous_coefficient(mu[0], self.sign_at_zero)],
            ProblemKind::TwodFirst | ProblemKind::TwodSecond => vec![1.0, mu[0], mu[1]],
        }
    }

    pub fn theta_f(&self, _mu: &[f64]) -> Vec<f64> {
        vec![1.0]
    }
}

/// `ℓ(μ) = sin((μ − sign μ) π/2)`, jumping from +1 to −1 across `μ = 0`.
pub fn discontinuous_coefficient(mu: f64, sign_at_zero: f64) -> f64 {
    let s = if mu > 0.0 {
        1.0
    } else if mu < 0.0 {
        -1.0
    } else {
        sign_at_zero
    };
    ((mu - s) * FRAC_PI_2).sin()
}

/// Builds the Dirichlet-eliminated affine components for `spec` on `disc`.
pub fn assemble_affine(spec: &ProblemSpec, disc: &TruthDiscretization) -> Result<AffineOperator> {
    let expected_q_a = ProblemSpec::new(spec.kind).q_a;
    if spec.q_a != expected_q_a || spec.q_f != 1 || spec.param_dim() != spec.kind.param_dim() {
        return Err(RbError::invalid(format!("inconsistent problem spec for {}", spec.kind)));
    }
    let m = disc.interior_per_dim();
    let d2 = disc.interior_diff2();
    let eye = DMatrix::<f64>::identity(m, m);
    let dxx = eye.kronecker(&d2);
    let dyy = d2.kronecker(&eye);
    let xs = DVector::from_fn(disc.interior_dim(), |k, _| disc.coords(k).0);
    let ys = DVector::from_fn(disc.interior_dim(), |k, _| disc.coords(k).1);
    let row_scale = |w: &DVector<f64>, a: &DMatrix<f64>| {
        let mut out = a.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            row *= w[i];
        }
        out
    };

    let (a_components, f_components) = match spec.kind {
        ProblemKind::OnedContinuous | ProblemKind::OnedDiscontinuous => (
            vec![-(&dxx + &dyy), -row_scale(&xs, &dxx)],
            vec![disc.sample(|x, y| -(4.0 * x * y).exp())],
        ),
        ProblemKind::TwodFirst => (
            vec![-dxx, -dyy, -DMatrix::identity(disc.interior_dim(), disc.interior_dim())],
            vec![disc.sample(|x, y| -10.0 * (8.0 * x * (y - 1.0)).sin())],
        ),
        ProblemKind::TwodSecond => (
            vec![-(&dxx + &dyy), -row_scale(&xs, &dxx), -row_scale(&ys, &dyy)],
            vec![disc.sample(|x, y| -(4.0 * x * y).exp())],
        ),
    };

    let sa = spec.clone();
    let sf = spec.clone();
    AffineOperator::new(
        a_components,
        f_components,
        Arc::new(move |mu: &[f64]| sa.theta_a(mu)),
        Arc::new(move |mu: &[f64]| sf.theta_f(mu)),
        spec.param_dim(),
    )
}
