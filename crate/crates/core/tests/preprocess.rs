mod common;

use common::{correlated_data, covariance_oracle, rng};
use harbench::linalg::Matrix;
use harbench::preprocess::{covariance, orthonormality_error, PcaModel, Scaler};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn covariance_matches_oracle() {
    let mut rng = rng(3);
    let x = correlated_data(&mut rng, 40, 7);
    let got = covariance(&x);
    let want = covariance_oracle(&x);
    for a in 0..7 {
        for b in 0..7 {
            assert!((got[(a, b)] - want[a][b]).abs() <= 1e-12 * want[a][b].abs().max(1.0));
        }
    }
}

#[test]
fn pca_basis_is_orthonormal_and_diagonalises_covariance() {
    let mut rng = rng(11);
    for trial in 0..20 {
        let d = rng.random_range(2..30);
        let n = rng.random_range(d + 2..200);
        let x = correlated_data(&mut rng, n, d);
        let rv = [0.8, 0.95, 0.99, 1.0][trial % 4];
        let pca = PcaModel::fit(&x, rv).unwrap();
        assert!(orthonormality_error(&pca.basis) <= 1e-8);
        assert!(pca.explained_variance >= rv - 1e-12);
        let projected = covariance(&pca.transform(&x).unwrap());
        for (i, &lambda) in pca.eigenvalues.iter().enumerate() {
            assert!((projected[(i, i)] - lambda).abs() <= 1e-6 * lambda.abs().max(1.0));
        }
        // one fewer component would fall short of the target
        let total: f64 = (0..d).map(|j| covariance(&x)[(j, j)]).sum();
        let short: f64 = pca.eigenvalues[..pca.output_dim() - 1].iter().sum();
        assert!(short < rv * total);
        for c in 0..pca.output_dim() {
            let col = pca.basis.column(c);
            let big = col.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
        }
    }
}

#[test]
fn pca_eigenvalues_are_sorted_and_nonnegative() {
    let x = correlated_data(&mut rng(5), 60, 12);
    let pca = PcaModel::fit(&x, 1.0).unwrap();
    assert!(pca.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
    assert!(pca.eigenvalues.iter().all(|&v| v >= 0.0));
}

#[test]
fn pca_needs_two_rows() {
    let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
    assert!(PcaModel::fit(&x, 0.95).is_err());
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1e3f64..1e3, rows * cols).prop_map(move |v| Matrix::from_vec(rows, cols, v))
}

proptest! {
    #[test]
    fn scaler_standardises_training_rows(x in (2usize..30, 1usize..8).prop_flat_map(|(n, d)| matrix(n, d))) {
        let scaler = Scaler::fit(&x).unwrap();
        let z = scaler.transform(&x).unwrap();
        for c in 0..x.cols() {
            let col = z.column(c);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            prop_assert!(mean.abs() <= 1e-9);
            let raw = x.column(c);
            let spread = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - raw.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread > 1e-6 {
                prop_assert!((var - 1.0).abs() <= 1e-9);
            }
        }
        let back = scaler.inverse(z.row(0)).unwrap();
        for (a, b) in back.iter().zip(x.row(0)) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn constant_column_maps_to_zero(n in 2usize..20, c in -1e3f64..1e3) {
        let x = Matrix::from_vec(n, 1, vec![c; n]);
        let scaler = Scaler::fit(&x).unwrap();
        prop_assert_eq!(scaler.std[0], 1.0);
        prop_assert!(scaler.transform(&x).unwrap().as_slice().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn pca_apply_matches_transform(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let x = correlated_data(&mut rng, 30, 6);
        let pca = PcaModel::fit(&x, 0.9).unwrap();
        let t = pca.transform(&x).unwrap();
        let one = pca.apply(x.row(4)).unwrap();
        for (a, b) in one.iter().zip(t.row(4)) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
