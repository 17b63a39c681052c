use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rbm_core::estimators::estimator_lebesgue;
use rbm_core::harness::make_training_grid;
use rbm_core::numerics::{complement_project, orthonormalize, pivoted_qr, GramSpec};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// SPD gram `MᵀM + I` from a random square matrix.
fn spd(n: usize) -> impl Strategy<Value = GramSpec> {
    matrix(n, n).prop_map(move |m| {
        let g = m.transpose() * &m + DMatrix::identity(n, n);
        GramSpec::explicit((&g + g.transpose()) * 0.5).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orthonormalize_gives_gram_orthonormal_basis(b in matrix(12, 5), gram in spd(12)) {
        let vectors: Vec<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
        let out = orthonormalize(&vectors, &gram, 1e-10).unwrap();
        for (i, u) in out.basis.iter().enumerate() {
            for (j, v) in out.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram.inner(u, v) - want).abs() < 1e-12);
            }
        }
        // Every input is reproduced from the basis and its coefficients.
        for (j, v) in vectors.iter().enumerate() {
            let mut r = v.clone();
            for (i, u) in out.basis.iter().enumerate() {
                r -= u * out.coeffs[(i, j)];
            }
            prop_assert!(gram.norm(&r) <= 1e-10 * (1.0 + gram.norm(v)));
        }
    }

    #[test]
    fn pivoted_qr_reconstructs_with_orthonormal_q(b in matrix(15, 6)) {
        let qr = pivoted_qr(&b, 1e-10).unwrap();
        let q = &qr.q;
        prop_assert_eq!(q.ncols(), qr.rank);
        prop_assert!((q.transpose() * q - DMatrix::identity(qr.rank, qr.rank)).amax() < 1e-12);
        let diag: Vec<f64> = (0..qr.rank).map(|k| qr.r[(k, k)].abs()).collect();
        prop_assert!(diag.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        for i in 0..qr.r.nrows() {
            for j in 0..i.min(qr.r.ncols()) {
                prop_assert_eq!(qr.r[(i, j)], 0.0);
            }
        }
        let bz = DMatrix::from_columns(&qr.perm.iter().map(|&p| b.column(p)).collect::<Vec<_>>());
        prop_assert!((bz - q * &qr.r).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn pivoted_qr_sees_planted_dependencies(b in matrix(20, 4), w in proptest::collection::vec(-2.0f64..2.0, 4)) {
        let combo = &b * DVector::from_vec(w);
        let mut cols: Vec<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
        cols.push(combo);
        cols.push(b.column(0) * 3.0);
        let qr = pivoted_qr(&DMatrix::from_columns(&cols), 1e-10).unwrap();
        prop_assert_eq!(qr.rank, 4);
    }

    #[test]
    fn complement_projection_is_orthogonal_and_idempotent(b in matrix(10, 3), v in matrix(10, 1)) {
        let q = pivoted_qr(&b, 1e-10).unwrap().q;
        let v = v.column(0).into_owned();
        let p = complement_project(&q, &v).unwrap();
        prop_assert!((q.transpose() * &p).amax() < 1e-12);
        prop_assert!((complement_project(&q, &p).unwrap() - &p).amax() < 1e-12);
        // ‖v‖² = ‖Qᵀv‖² + ‖(I − QQᵀ)v‖²
        let split = (q.transpose() * &v).norm_squared() + p.norm_squared();
        prop_assert!((split - v.norm_squared()).abs() <= 1e-12 * v.norm_squared().max(1.0));
    }

    #[test]
    fn lebesgue_value_is_l1_norm_and_homogeneous(c in proptest::collection::vec(-10.0f64..10.0, 1..12), s in 0.0f64..5.0) {
        let c = DVector::from_vec(c);
        let e = estimator_lebesgue(&c);
        prop_assert_eq!(e.value, c.iter().map(|x| x.abs()).sum::<f64>());
        prop_assert_eq!(e.alpha_used, 1.0);
        prop_assert!((estimator_lebesgue(&(&c * s)).value - s * e.value).abs() <= 1e-12 * (1.0 + s * e.value));
    }

    #[test]
    fn training_grid_is_a_tensor_product(nx in 2usize..9, ny in 2usize..9, lo in -3.0f64..0.0, width in 0.1f64..4.0) {
        let g = make_training_grid(&[(lo, lo + width), (0.0, 1.0)], &[nx, ny]).unwrap();
        prop_assert_eq!(g.len(), nx * ny);
        prop_assert_eq!(g[0].0.clone(), vec![lo, 0.0]);
        prop_assert_eq!(g[nx * ny - 1].0.clone(), vec![lo + width, 1.0]);
        for (k, p) in g.iter().enumerate() {
            prop_assert_eq!(p[1], g[(k / nx) * nx][1]);
            prop_assert_eq!(p[0], g[k % nx][0]);
        }
    }
}
