mod common;

use common::{natural_spline, project_by_hand, seeded};
use orthomodel_core::geometry::{chord_length_params, CameraPair, CubicBSpline, HermiteCurve, Point2, Point3};
use orthomodel_core::View;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn projection_matches_hand_formula() {
    let pair = CameraPair::canonical();
    let mut rng = seeded(11);
    for _ in 0..1000 {
        let p = Point3::new(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0));
        for view in [View::Front, View::Side] {
            assert_eq!(pair.project(view, &p), project_by_hand(view, &p));
        }
    }
}

#[test]
fn triangulation_round_trip() {
    let pair = CameraPair::canonical();
    let mut rng = seeded(12);
    for _ in 0..10_000 {
        let p = Point3::new(rng.random_range(-256.0..256.0), rng.random_range(-256.0..256.0), rng.random_range(-256.0..256.0));
        let back = pair.triangulate(&pair.project_front(&p), &pair.project_side(&p), 1e-9).unwrap();
        assert!((back - p).amax() <= 1e-9, "{p} -> {back}");
    }
}

#[test]
fn triangulation_rejects_row_mismatch() {
    let pair = CameraPair::canonical();
    assert!(pair.triangulate(&Point2::new(0.0, 1.0), &Point2::new(0.0, 2.0), 0.5).is_err());
    let p = pair.triangulate(&Point2::new(3.0, 1.0), &Point2::new(-4.0, 1.25), 0.5).unwrap();
    assert_eq!(p, Point3::new(3.0, 1.125, 4.0));
}

proptest! {
    #[test]
    fn epipolar_rows_agree(x in -1e3..1e3f64, y in -1e3..1e3f64, z in -1e3..1e3f64) {
        let pair = CameraPair::canonical();
        let p = Point3::new(x, y, z);
        prop_assert!((pair.project_front(&p).y - pair.project_side(&p).y).abs() <= 1e-9);
    }
}

#[test]
fn bspline_matches_tridiagonal_natural_spline() {
    let mut rng = seeded(13);
    for trial in 0..50 {
        let n = rng.random_range(2..12);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        xs[0] = 0.0;
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        if xs.len() < 2 {
            continue;
        }
        let ys: Vec<f64> = xs.iter().map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = CubicBSpline::interpolate_scalar(&ys, &xs).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.eval_scalar(*x).unwrap() - y).abs() <= 1e-9, "trial {trial}");
        }
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        for k in 0..=40 {
            let u = (lo + (hi - lo) * k as f64 / 40.0).min(hi);
            let want = natural_spline(&xs, &ys, u);
            assert!((s.eval_scalar(u).unwrap() - want).abs() <= 1e-9, "trial {trial} u {u}");
        }
    }
}

#[test]
fn bspline_reproduces_lines() {
    let xs = [0.0, 0.1, 0.35, 0.8, 1.0];
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 2.0).collect();
    let s = CubicBSpline::interpolate_scalar(&ys, &xs).unwrap();
    for k in 0..=20 {
        let u = k as f64 / 20.0;
        assert!((s.eval_scalar(u).unwrap() - (3.0 * u - 2.0)).abs() < 1e-12);
    }
}

#[test]
fn chord_params_are_normalised() {
    let pts = [nalgebra::Vector2::new(0.0, 0.0), nalgebra::Vector2::new(3.0, 4.0), nalgebra::Vector2::new(3.0, 14.0)];
    assert_eq!(chord_length_params(&pts), vec![0.0, 1.0 / 3.0, 1.0]);
}

#[test]
fn hermite_interpolates_key_points() {
    let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 2.0, 0.0), Point3::new(4.0, 1.0, -1.0), Point3::new(5.0, -3.0, 2.0)];
    let c = HermiteCurve::new(pts.clone()).unwrap();
    for (i, p) in pts.iter().enumerate() {
        assert!((c.eval(c.knot(i)).unwrap() - p).norm() < 1e-12);
    }
}
