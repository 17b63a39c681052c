use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{RbError, Result};

/// Chebyshev–Gauss–Lobatto nodes `x_j = cos(jπ/n)` (descending from 1 to −1)
/// and the first-derivative collocation matrix on them.
///
/// Off-diagonal node differences use the product-of-sines identity and the
/// diagonal is the negative row sum, which keeps rounding low for large `n`.
pub fn chebyshev_grid(n: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if n == 0 {
        return Err(RbError::invalid("chebyshev_grid needs n >= 1"));
    }
    let nf = n as f64;
    let nodes = DVector::from_fn(n + 1, |j, _| {
        // exact symmetric values, e.g. 0 at the midpoint for even n
        let theta = (n as f64 - 2.0 * j as f64) * PI / (2.0 * nf);
        theta.sin()
    });
    let weight = |j: usize| {
        let c = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j.is_multiple_of(2) { c } else { -c }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i == j {
                continue;
            }
            let diff = -2.0
                * ((i + j) as f64 * PI / (2.0 * nf)).sin()
                * ((i as f64 - j as f64) * PI / (2.0 * nf)).sin();
            d[(i, j)] = weight(i) / weight(j) / diff;
        }
        let row_sum: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row_sum;
    }
    Ok((nodes, d))
}
