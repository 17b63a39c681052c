use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{RbError, Result};

/// One row of the cancellation demo for `b = a + μ·4^{−N}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FloatDemoRow {
    pub n: u32,
    pub a: f64,
    /// `max_μ √((a − b)²)`
    pub max_stable: f64,
    /// `max_μ √(max(a² − 2ab + b², 0))`
    pub max_expanded: f64,
    /// `max_μ μ·4^{−N}` in exact-as-possible arithmetic.
    pub max_exact: f64,
}

/// Sample points `μ_i = (i + 1)/(samples + 1)`, uniformly spaced in `(0, 1)`.
pub fn demo_mu_samples(samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |i| (i + 1) as f64 / (samples + 1) as f64)
}

/// For each `N` a fresh `a ~ U(0, 1)` is drawn from one seeded stream.
pub fn float_demo(n_values: &[u32], mu_samples: usize, seed: u64) -> Result<Vec<FloatDemoRow>> {
    if mu_samples == 0 {
        return Err(RbError::invalid("float_demo needs at least one mu sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = n_values
        .iter()
        .map(|&n| {
            let a: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let scale = 0.25f64.powi(n as i32);
            let mut row = FloatDemoRow { n, a, max_stable: 0.0, max_expanded: 0.0, max_exact: 0.0 };
            for mu in demo_mu_samples(mu_samples) {
                let b = a + mu * scale;
                let diff = a - b;
                let stable = (diff * diff).sqrt();
                let expanded = (a * a - 2.0 * a * b + b * b).max(0.0).sqrt();
                row.max_stable = row.max_stable.max(stable);
                row.max_expanded = row.max_expanded.max(expanded);
                row.max_exact = row.max_exact.max(mu * scale);
            }
            row
        })
        .collect();
    Ok(rows)
}
