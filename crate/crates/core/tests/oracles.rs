//! Cross-checks against independent computations.

use std::f64::consts::{E, PI};

use convexlab::builtins::{aubert, determinant, frobenius_squared, w0};
use convexlab::energy::{DomainGrid, OrderedSVEnergy};
use convexlab::planar::{boundary_distance, linear_distortion, svd_ordered, Mat2};
use convexlab::polyconvexity::{c_interval, minorant_residual, polyconvexity_falsify, required_c_bound, BoundKind};
use convexlab::rank_one::{rank_one_scan, ScanSettings};
use convexlab::sublevel::{compactness_check, grid_connectivity};
use convexlab::Verdict;
use proptest::prelude::*;

/// Eigenvalues of the symmetric matrix `FᵀF` by the quadratic formula.
fn gram_eigenvalues(m: &Mat2) -> (f64, f64) {
    let [a, b, c, d] = m.entries();
    let (p, q, r) = (a * a + c * c, a * b + c * d, b * b + d * d);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    (mean + rad, mean - rad)
}

fn matrix() -> impl Strategy<Value = Mat2> {
    (-2.0f64..2.0, -2.0f64..2.0, -PI..PI, -PI..PI).prop_map(|(a, b, p, q)| {
        Mat2::rotation(p) * Mat2::diag(a.max(b).exp(), a.min(b).exp()) * Mat2::rotation(q)
    })
}

proptest! {
    #[test]
    fn singular_values_match_gram_eigenvalues(m in matrix()) {
        let sv = svd_ordered(&m);
        let (g1, g2) = gram_eigenvalues(&m);
        prop_assert!((sv.lambda1 * sv.lambda1 - g1).abs() <= 1e-12 * g1);
        prop_assert!((sv.lambda2 * sv.lambda2 - g2).abs() <= 1e-10 * g1);
        prop_assert!(sv.reconstruct().max_abs_diff(&m) <= 1e-12 * sv.lambda1);
    }

    /// Distance to the singular matrices equals `min |F x|` over unit `x`.
    #[test]
    fn boundary_distance_by_brute_force(m in matrix()) {
        let mut best = f64::INFINITY;
        let n = 20_000;
        for k in 0..n {
            let t = PI * k as f64 / n as f64;
            let (x, y) = (t.cos(), t.sin());
            let [a, b, c, d] = m.entries();
            best = best.min((a * x + b * y).hypot(c * x + d * y));
        }
        let d = boundary_distance(&m).unwrap();
        prop_assert!(d <= best + 1e-12 * best.max(1.0));
        prop_assert!(best - d <= 1e-6 * m.operator_norm());
        prop_assert!((linear_distortion(&m).unwrap() - m.operator_norm() / d).abs() <= 1e-9 * m.operator_norm() / d);
    }
}

#[test]
fn w0_values_at_reference_points() {
    let g = w0().to_ordered();
    let direct = |a: f64, b: f64| {
        let (k, d) = (a / b, a * b);
        k - k.ln() + d.ln() + 1.0 / d
    };
    for (a, b) in [(1.0, 1.0), (E.powi(4), E.powi(3)), (E, 1.0), (3.0, 0.2)] {
        assert!((g.value(a, b) - direct(a, b)).abs() <= 1e-12 * direct(a, b).abs());
    }
}

#[test]
fn interval_and_bound_against_closed_form() {
    let g = w0().to_ordered();
    let (g1, g2) = (E.powi(4), E.powi(3));
    let i = c_interval(&g, g1, g2).unwrap();
    assert!((i.c_lo + (1.0 + E.powi(8)) / E.powi(14)).abs() < 1e-15);
    assert!((i.c_lo - -0.002_479_58).abs() < 1e-8);
    let c_hi = -(1.0 + E - 3.0 * E.powi(8) + E.powi(9)) / (E.powi(14) * (1.0 + E));
    assert!((i.c_hi - c_hi).abs() < 1e-15);
    let b = required_c_bound(&g, (g1, g2), (E, 1.0)).unwrap();
    assert_eq!(b.kind, BoundKind::Upper);
    assert!((b.threshold - -0.003_771_47).abs() < 1e-8);
    assert!(b.threshold < i.c_lo);
    // Any c in the interval violates the minorant at ν = (e, 1).
    for c in [i.c_lo, 0.5 * (i.c_lo + i.c_hi), i.c_hi] {
        assert!(minorant_residual(&g, (g1, g2), (E, 1.0), c).unwrap() < 0.0);
    }
}

#[test]
fn norm_squared_minorant_holds_with_zero() {
    let e = frobenius_squared();
    let pts: Vec<(f64, f64)> = DomainGrid::square(-2.0, 2.0, 15)
        .ordered_points()
        .into_iter()
        .map(|p| (p.lambda1, p.lambda2))
        .collect();
    for &g in &pts {
        for &n in &pts {
            let r = minorant_residual(&e, g, n, 0.0).unwrap();
            let exact = (n.0 - g.0).powi(2) + (n.1 - g.1).powi(2);
            assert!((r - exact).abs() <= 1e-12 * (1.0 + exact) * 100.0);
        }
    }
    assert_eq!(polyconvexity_falsify(&e, &pts, &pts).verdict, Verdict::NoViolationFound);
}

#[test]
fn scan_agrees_with_known_convexity() {
    let settings = ScanSettings {
        bases: DomainGrid::square(-1.5, 1.5, 13),
        ..ScanSettings::default()
    };
    assert_eq!(rank_one_scan(&frobenius_squared(), &settings).verdict, Verdict::NoViolationFound);
    assert_eq!(rank_one_scan(&determinant(), &settings).verdict, Verdict::NoViolationFound);
    let concave = OrderedSVEnergy::new("neg-norm2", |a: f64, b: f64| -(a * a + b * b));
    assert_eq!(rank_one_scan(&concave, &settings).verdict, Verdict::Fail);
}

/// Every grid node of `S_c` must respect the reported radius and margin.
#[test]
fn compactness_bounds_hold_on_dense_sweep() {
    let split = w0();
    let g = split.to_ordered();
    for c in [2.5, 3.0, 5.0, 10.0] {
        let r = compactness_check(&split, c);
        assert_eq!(r.verdict, Verdict::Pass);
        let (radius, margin) = (r.radius.unwrap(), r.boundary_margin.unwrap());
        let mut inside = 0;
        for p in DomainGrid::square(-8.0, 8.0, 641).ordered_points() {
            if g.value(p.lambda1, p.lambda2) <= c {
                inside += 1;
                assert!(p.lambda1 < radius, "c = {c}: lambda1 {} >= {radius}", p.lambda1);
                assert!(p.lambda2 > margin, "c = {c}: lambda2 {} <= {margin}", p.lambda2);
            }
        }
        assert!(inside > 0);
    }
}

#[test]
fn flood_fill_stable_under_refinement() {
    let blobs = OrderedSVEnergy::new("blobs", |a: f64, b: f64| {
        let (u, v) = (a.ln(), b.ln());
        ((u - 2.0).powi(2) + v * v).min((u + 0.5).powi(2) + (v + 2.0).powi(2))
    });
    let coarse = DomainGrid::square(-3.0, 3.0, 121);
    let fine = coarse.refined();
    let cases: Vec<(OrderedSVEnergy, f64)> = vec![
        (w0().to_ordered(), 2.1),
        (w0().to_ordered(), 4.0),
        (aubert(), 0.0),
        (aubert(), -1.0),
        (blobs.clone(), 0.25),
        (blobs, 4.0),
    ];
    for (e, c) in cases {
        let a = grid_connectivity(&e, c, &coarse);
        let b = grid_connectivity(&e, c, &fine);
        assert_eq!(a.components, b.components, "{} at {c}", e.name());
    }
}
