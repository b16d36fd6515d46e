mod common;

use common::{channel_oracle, random_window, rel_err, rng, window_oracle};
use harbench::features::{ara, channel_features, extract_all, extract_from_rows, FeatureLayout};
use harbench::synthetic::SyntheticSpec;
use harbench::windowing::WindowSet;
use harbench::WindowTechnique;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn matches_oracle_on_random_windows() {
    let mut rng = rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let w = rng.random_range(2..=150);
        let groups = rng.random_range(0..=2);
        let channels = 3 * groups + rng.random_range(1..=2);
        let m = common::manifest("oracle", channels, 50.0, 1.0);
        let layout = FeatureLayout::for_manifest(&m);
        let data = random_window(&mut rng, w, channels);
        let got = extract_from_rows(&data, &layout).unwrap();
        let want = window_oracle(&data, channels, &m.triplet_groups);
        assert_eq!(got.len(), want.len());
        for (a, b) in got.as_slice().iter().zip(&want) {
            worst = worst.max(rel_err(*a, *b));
        }
    }
    assert!(worst <= 1e-9, "worst relative error {worst:e}");
}

#[test]
fn hand_computed_values() {
    let f = channel_features(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(f.mean, 2.5);
    assert!((f.sd - 1.25f64.sqrt()).abs() < 1e-15);
    assert_eq!(f.aad, 1.0);
    assert_eq!(f.median, 2.5);
    assert_eq!(f.iqr, 1.5);
    assert_eq!(f.auc, 7.5);
    // (1+4)/2 + (4+9)/2 + (9+16)/2
    assert_eq!(f.sq_auc, 21.5);
    assert!(f.skew.abs() < 1e-15);
    assert!((f.kurtosis - (-1.36)).abs() < 1e-12);
    assert_eq!(ara(&[3.0, 0.0], &[4.0, 0.0], &[0.0, 2.0]).unwrap(), 3.5);
}

#[test]
fn layout_dimension_is_eleven_per_channel_plus_groups() {
    // a 23-channel layout with 7 triplets, as in a chest/ankle/arm rig
    let mut m = common::manifest("rig", 23, 50.0, 1.0);
    m.triplet_groups = vec![[0, 1, 2], [5, 6, 7], [8, 9, 10], [11, 12, 13], [14, 15, 16], [17, 18, 19], [20, 21, 22]];
    let layout = FeatureLayout::for_manifest(&m);
    assert_eq!(layout.dim(), 11 * 23 + 7);
    assert_eq!(layout.names().count(), layout.dim());
}

#[test]
fn extract_all_rows_follow_window_order() {
    let ts = SyntheticSpec::default().trial_set();
    let ws = WindowSet::generate(&ts, WindowTechnique::FullNonOverlapping, ts.manifest.window_samples()).unwrap();
    let (x, timing) = extract_all(&ts, &ws).unwrap();
    assert_eq!(x.rows(), ws.len());
    assert_eq!(timing.count, ws.len());
    assert!(timing.min_seconds <= timing.mean_seconds && timing.mean_seconds <= timing.max_seconds);
    let layout = FeatureLayout::for_manifest(&ts.manifest);
    for i in [0, ws.len() / 2, ws.len() - 1] {
        let one = extract_from_rows(ws.data(&ts, i), &layout).unwrap();
        assert_eq!(x.row(i), one.as_slice());
    }
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 2..80)
}

proptest! {
    #[test]
    fn shift_moves_location_features_only(x in series(), c in -50.0f64..50.0) {
        let a = channel_features(&x).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let b = channel_features(&shifted).unwrap();
        let tol = |v: f64| 1e-9 * v.abs().max(1.0) * 100.0;
        prop_assert!((b.mean - (a.mean + c)).abs() <= tol(a.mean + c));
        prop_assert!((b.median - (a.median + c)).abs() <= tol(a.median + c));
        prop_assert!((b.max - (a.max + c)).abs() <= tol(a.max));
        prop_assert!((b.sd - a.sd).abs() <= tol(a.sd));
        prop_assert!((b.aad - a.aad).abs() <= tol(a.aad));
        prop_assert!((b.iqr - a.iqr).abs() <= tol(a.iqr));
        if a.sd > 1e-3 {
            prop_assert!((b.skew - a.skew).abs() <= 1e-6);
            prop_assert!((b.kurtosis - a.kurtosis).abs() <= 1e-6);
        }
    }

    #[test]
    fn scaling_keeps_shape_features(x in series(), s in 0.01f64..100.0) {
        let a = channel_features(&x).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
        let b = channel_features(&scaled).unwrap();
        prop_assert!((b.sd - s * a.sd).abs() <= 1e-9 * (s * a.sd).max(1.0));
        prop_assert!((b.iqr - s * a.iqr).abs() <= 1e-9 * (s * a.iqr).max(1.0));
        prop_assert!((b.sq_auc - s * s * a.sq_auc).abs() <= 1e-9 * (s * s * a.sq_auc).max(1.0));
        if a.sd > 1e-3 {
            prop_assert!((b.skew - a.skew).abs() <= 1e-8);
            prop_assert!((b.kurtosis - a.kurtosis).abs() <= 1e-8);
        }
    }

    #[test]
    fn order_statistics_are_consistent(x in series()) {
        let f = channel_features(&x).unwrap();
        prop_assert!(f.min <= f.median && f.median <= f.max);
        prop_assert!(f.min <= f.mean && f.mean <= f.max);
        prop_assert!(f.iqr >= 0.0 && f.iqr <= f.max - f.min);
        prop_assert!(f.sd >= 0.0 && f.aad <= f.sd + 1e-12);
        prop_assert!(f.kurtosis >= -2.0 - 1e-9);
        prop_assert!(f.sq_auc >= 0.0);
    }

    #[test]
    fn agrees_with_oracle(x in series()) {
        let got = channel_features(&x).unwrap().to_array();
        let want = channel_oracle(&x);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!(rel_err(*a, *b) <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn resultant_is_at_least_each_axis(
        v in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 1..40)
    ) {
        let (x, y, z): (Vec<f64>, Vec<f64>, Vec<f64>) =
            (v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.1).collect(), v.iter().map(|p| p.2).collect());
        let r = ara(&x, &y, &z).unwrap();
        let mean_abs = |a: &[f64]| a.iter().map(|q| q.abs()).sum::<f64>() / a.len() as f64;
        prop_assert!(r + 1e-12 >= mean_abs(&x).max(mean_abs(&y)).max(mean_abs(&z)));
    }
}
