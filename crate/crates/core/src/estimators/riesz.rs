use nalgebra::{DMatrix, DVector};

use crate::error::{RbError, Result};
use crate::numerics::GramSpec;
use crate::rbm::ReducedBasis;
use crate::truth::AffineOperator;

/// Inner-product tables of the Riesz representers; every dimension depends
/// only on `N`, `Q_a` and `Q_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualTables {
    pub q_a: usize,
    pub q_f: usize,
    pub n: usize,
    /// `(𝒞^q̃₁, 𝒞^q̃₂)_X`, `Q_f × Q_f`
    pub cc: DMatrix<f64>,
    /// `(𝒞^q̃, ℒ_m^q)_X`, `Q_f × N·Q_a`, column `m·Q_a + q`
    pub cl: DMatrix<f64>,
    /// `(ℒ_m^q, ℒ_m'^q')_X`, `N·Q_a × N·Q_a`
    pub ll: DMatrix<f64>,
}

/// Riesz representers of the load components and of `a^q(ξ_m, ·)`.
///
/// Representers are stored whitened (`L⁻¹ f` for `G = LLᵀ`), so `X`-inner
/// products are plain dot products; with the identity gram this is the
/// representer itself.
#[derive(Clone, Debug)]
pub struct RieszData {
    gram: GramSpec,
    c: Vec<DVector<f64>>,
    l: Vec<DVector<f64>>,
    tables: ResidualTables,
}

impl RieszData {
    /// Load representers only (`N = 0`).
    pub fn new(op: &AffineOperator, gram: &GramSpec) -> Result<Self> {
        if let Some(d) = gram.dim() {
            if d != op.dim() {
                return Err(RbError::InvalidGram(format!(
                    "gram dimension {d} does not match truth dimension {}",
                    op.dim()
                )));
            }
        }
        let c: Vec<_> = op.f_components.iter().map(|f| gram.dual_whiten(f)).collect();
        let q_f = c.len();
        let cc = DMatrix::from_fn(q_f, q_f, |i, j| c[i].dot(&c[j]));
        Ok(RieszData {
            gram: gram.clone(),
            c,
            l: Vec::new(),
            tables: ResidualTables {
                q_a: op.q_a(),
                q_f,
                n: 0,
                cc,
                cl: DMatrix::zeros(q_f, 0),
                ll: DMatrix::zeros(0, 0),
            },
        })
    }

    pub fn n(&self) -> usize {
        self.tables.n
    }

    pub fn q_a(&self) -> usize {
        self.tables.q_a
    }

    pub fn tables(&self) -> &ResidualTables {
        &self.tables
    }

    pub fn gram(&self) -> &GramSpec {
        &self.gram
    }

    /// Whitened load representers.
    pub fn c_whitened(&self) -> &[DVector<f64>] {
        &self.c
    }

    /// Whitened operator representers, index `m·Q_a + q`.
    pub fn l_whitened(&self) -> &[DVector<f64>] {
        &self.l
    }

    /// `𝒞^q̃` as an element of the truth space.
    pub fn representer_c(&self, q: usize) -> DVector<f64> {
        self.gram.unwhiten(&self.c[q])
    }

    /// `ℒ_m^q` as an element of the truth space.
    pub fn representer_l(&self, m: usize, q: usize) -> DVector<f64> {
        self.gram.unwhiten(&self.l[m * self.tables.q_a + q])
    }

    /// Appends the representers of `ξ`; existing table entries are kept.
    pub fn push(&mut self, op: &AffineOperator, xi: &DVector<f64>) {
        let t = &mut self.tables;
        let old = t.n * t.q_a;
        let new = old + t.q_a;
        for a in &op.a_components {
            self.l.push(self.gram.dual_whiten(&(a * xi)));
        }
        t.cl = std::mem::replace(&mut t.cl, DMatrix::zeros(0, 0)).resize_horizontally(new, 0.0);
        t.ll = std::mem::replace(&mut t.ll, DMatrix::zeros(0, 0)).resize(new, new, 0.0);
        for j in old..new {
            for (qf, c) in self.c.iter().enumerate() {
                t.cl[(qf, j)] = c.dot(&self.l[j]);
            }
            for i in 0..=j {
                let v = self.l[i].dot(&self.l[j]);
                t.ll[(i, j)] = v;
                t.ll[(j, i)] = v;
            }
        }
        t.n += 1;
    }

    /// Pushes every basis vector not yet represented.
    pub fn extend_to(&mut self, op: &AffineOperator, basis: &ReducedBasis) {
        for xi in &basis.xi()[self.n()..] {
            self.push(op, xi);
        }
    }
}

pub fn build_riesz_data(op: &AffineOperator, basis: &ReducedBasis) -> Result<RieszData> {
    let mut riesz = RieszData::new(op, basis.gram())?;
    riesz.extend_to(op, basis);
    Ok(riesz)
}
