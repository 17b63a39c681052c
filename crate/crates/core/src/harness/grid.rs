use crate::error::{RbError, Result};
use crate::truth::ParamPoint;

/// Tensor grid of uniformly spaced points, both endpoints included, with the
/// first dimension varying fastest.
pub fn make_training_grid(domain: &[(f64, f64)], counts: &[usize]) -> Result<Vec<ParamPoint>> {
    if domain.len() != counts.len() || domain.is_empty() {
        return Err(RbError::invalid(format!(
            "grid needs one count per dimension: {} dimensions, {} counts",
            domain.len(),
            counts.len()
        )));
    }
    if let Some(c) = counts.iter().find(|&&c| c < 2) {
        return Err(RbError::invalid(format!("grid counts must be at least 2, got {c}")));
    }
    if domain.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(RbError::invalid("grid domain needs finite intervals with lo < hi"));
    }
    let axes: Vec<Vec<f64>> = domain.iter().zip(counts).map(|(&(lo, hi), &n)| linspace(lo, hi, n)).collect();
    let total: usize = counts.iter().product();
    let points = (0..total)
        .map(|mut k| {
            let coords = axes
                .iter()
                .map(|axis| {
                    let c = axis[k % axis.len()];
                    k /= axis.len();
                    c
                })
                .collect::<Vec<_>>();
            ParamPoint(coords)
        })
        .collect();
    Ok(points)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + h * i as f64 }).collect()
}
