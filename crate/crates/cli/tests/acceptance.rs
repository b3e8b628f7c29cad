//! Acceptance criteria. Each prints one PASS/FAIL line; tolerances and time
//! limits are pinned here.

use std::f64::consts::E;
use std::process::Command;
use std::time::{Duration, Instant};

use convexlab::builtins::{adm, aubert, aubert_matrix, frobenius_squared, silhavy_energy, w0, AdmParameter};
use convexlab::energy::DomainGrid;
use convexlab::planar::{linear_distortion, svd_ordered};
use convexlab::polyconvexity::{c_interval, minorant_residual, polyconvexity_falsify, required_c_bound, PolyGrids};
use convexlab::rank_one::{
    convexity_scan, rank_one_random_scan, rank_one_scan, split_rank_one_criterion, LogGrid, ScanSettings,
};
use convexlab::report::ReproduceReport;
use convexlab::sublevel::{
    aubert_connect_path, compactness_check, connect_path, grid_connectivity, ordered_compactness_check,
    random_gl_pairs, Curve, SAMPLES_PER_SEGMENT,
};
use convexlab::Verdict;

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn criterion_1() -> Outcome {
    let g = w0().to_ordered();
    let gamma = (E.powi(4), E.powi(3));
    let nu = (E, 1.0);
    let i = c_interval(&g, gamma.0, gamma.1).unwrap();
    let closed = -(1.0 + E.powi(8)) / E.powi(14);
    let bound = required_c_bound(&g, gamma, nu).unwrap();
    let r = polyconvexity_falsify(&g, &[gamma], &[nu]);
    let ok = (i.c_lo - -0.002_479_58).abs() <= 1e-8
        && (i.c_lo - closed).abs() <= 1e-8
        && (bound.threshold - -0.003_771_47).abs() <= 1e-8
        && r.verdict == Verdict::Fail
        && r.witness.is_some();
    outcome(
        ok,
        format!("c_lo {} (closed form {closed}), bound {}, verdict {}", i.c_lo, bound.threshold, r.verdict),
    )
}

fn criterion_2() -> Outcome {
    let r = split_rank_one_criterion(&w0(), &LogGrid::CRITERION).unwrap();
    let iii = &r.condition_iii;
    let iv_margin = r.condition_iv.worst_margin.unwrap_or(f64::NEG_INFINITY);
    let first = iii.max_abs_first_disjunct.unwrap_or(f64::INFINITY);
    let ok = (r.h0.effective() - 1.0).abs() <= 1e-6
        && (r.h0.numeric - 1.0).abs() <= 1e-6
        && (r.f0.effective() + 1.0).abs() <= 1e-6
        && (r.f0.numeric + 1.0).abs() <= 1e-6
        && iii.points == 2000
        && iii.first_disjunct_held == iii.points
        && iii.points_below_one > 0
        && iii.points_above_one > 0
        && first <= 1e-10
        && iv_margin >= -1e-9
        && r.verdict == Verdict::Pass;
    outcome(
        ok,
        format!(
            "h0 {}, f0 {}, iii max |first| {first:e} over {} points, iv margin {iv_margin}",
            r.h0.numeric, r.f0.numeric, iii.points
        ),
    )
}

fn criterion_3() -> Outcome {
    let s = ScanSettings::default();
    let e = |g: f64| adm(AdmParameter::new(g).unwrap());
    let r12 = rank_one_scan(&e(1.2), &s).verdict;
    let r11 = rank_one_scan(&e(1.1), &s).verdict;
    let c95 = convexity_scan(&e(0.95), &s).verdict;
    let c94 = convexity_scan(&e(0.94), &s).verdict;
    let ok = r12 == Verdict::Fail
        && r11 == Verdict::NoViolationFound
        && c95 == Verdict::Fail
        && c94 == Verdict::NoViolationFound;
    outcome(
        ok,
        format!("rank-one 1.2 {r12}, 1.1 {r11}; convexity 0.95 {c95}, 0.94 {c94}"),
    )
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for c in [3.0, 5.0, 10.0] {
        let r = compactness_check(&w0(), c);
        let margin = r.boundary_margin.unwrap_or(0.0);
        ok &= r.verdict == Verdict::Pass && margin > 0.0 && r.radius.is_some();
        detail += &format!("W0 c={c}: {} r'={margin:.4}; ", r.verdict);
    }
    let adm_r = ordered_compactness_check(&adm(AdmParameter::new(1.1).unwrap()), 1.0);
    let adm_ok = adm_r.verdict == Verdict::Fail
        && adm_r.escapes.iter().any(|s| s.family == "(1/n)*id" && s.enters);
    let aub = ordered_compactness_check(&aubert(), 0.0);
    let aub_ok = aub.verdict == Verdict::Fail && aub.escapes.iter().any(|s| s.family == "n*id" && s.enters);
    let sil = ordered_compactness_check(&silhavy_energy(), 1.0);
    let sil_ok = sil.verdict == Verdict::Fail && sil.separated == Some(false) && sil.bounded != Some(false);
    ok &= adm_ok && aub_ok && sil_ok;
    detail += &format!("adm:1.1 {}, aubert {}, silhavy {}", adm_r.verdict, aub.verdict, sil.verdict);
    outcome(ok, detail)
}

fn criterion_5() -> Outcome {
    let split = w0();
    let g = split.to_ordered();
    let (mut worst_gap, mut worst_excess, mut worst_det, mut worst_k) = (0.0f64, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    let mut ok = true;
    for (f, ft) in random_gl_pairs(2024, 100, 1.5) {
        let c = g.eval_matrix(&f).unwrap().max(g.eval_matrix(&ft).unwrap());
        let p = connect_path(&split, &f, &ft, c).unwrap();
        ok &= p.segments.len() == 4;
        worst_gap = worst_gap
            .max(p.endpoint_gap())
            .max(p.start().max_abs_diff(&f))
            .max(p.end().max_abs_diff(&ft));
        for seg in &p.segments {
            let first = seg.eval(0.0);
            for i in 0..=SAMPLES_PER_SEGMENT {
                let m = seg.eval(i as f64 / SAMPLES_PER_SEGMENT as f64);
                worst_excess = worst_excess.max(g.eval_matrix(&m).unwrap() - c);
                match seg.curve {
                    Curve::DistortionDescent { .. } => worst_det = worst_det.max((m.det() - first.det()).abs()),
                    Curve::ConformalScaling { .. } => {
                        let k0 = linear_distortion(&first).unwrap();
                        worst_k = worst_k.max((linear_distortion(&m).unwrap() - k0).abs());
                    }
                    _ => {}
                }
            }
        }
    }
    ok &= worst_gap <= 1e-10 && worst_excess <= 1e-9 && worst_det <= 1e-12 && worst_k <= 1e-12;

    // Signs of dW/ds along the three diagonal segments, with W evaluated
    // from the matrix formula.
    let e = aubert();
    let (mut x1, mut x2, mut x3) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for (a, b) in random_gl_pairs(77, 50, 1.0) {
        let (f, ft) = if svd_ordered(&a).lambda1 <= svd_ordered(&b).lambda1 { (a, b) } else { (b, a) };
        let c = e.eval_matrix(&f).unwrap().max(e.eval_matrix(&ft).unwrap());
        let p = aubert_connect_path(&e, &f, &ft, c).unwrap();
        ok &= !p.swapped && p.validate(&e, SAMPLES_PER_SEGMENT).valid;
        for seg in &p.segments {
            let Curve::Diagonal { label, .. } = &seg.curve else { continue };
            let h = 1e-6;
            for i in 0..SAMPLES_PER_SEGMENT {
                let s = (i as f64 + 0.5) / SAMPLES_PER_SEGMENT as f64;
                let d = (aubert_matrix(&seg.eval(s + h)) - aubert_matrix(&seg.eval(s - h))) / (2.0 * h);
                match label.as_str() {
                    "X1" => x1 = x1.max(d),
                    "X2" => x2 = x2.max(d),
                    _ => x3 = x3.min(d),
                }
            }
        }
    }
    ok &= x1 < 0.0 && x2 < 0.0 && x3 >= 0.0;
    outcome(
        ok,
        format!(
            "W0: gap {worst_gap:e}, excess {worst_excess:e}, det drift {worst_det:e}, K drift {worst_k:e}; \
             aubert: max X1 {x1:e}, max X2 {x2:e}, min X3 {x3:e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let g = w0().to_ordered();
    let mut counts = Vec::new();
    for n in [121, 241] {
        let grid = DomainGrid::square(-3.0, 3.0, n);
        for c in [2.1, 3.0, 5.0] {
            counts.push(grid_connectivity(&g, c, &grid).components);
        }
    }
    let coarse = DomainGrid::square(-3.0, 3.0, 121);
    let a121 = grid_connectivity(&aubert(), 0.0, &coarse).components;
    let a241 = grid_connectivity(&aubert(), 0.0, &coarse.refined()).components;
    let ok = counts.iter().all(|&k| k == 1) && a121 == 1 && a241 == 1;
    outcome(ok, format!("W0 components {counts:?}, aubert {a121}/{a241}"))
}

fn criterion_7() -> Outcome {
    let s = ScanSettings::default();
    let w = rank_one_random_scan(&w0().to_ordered(), 10_000, 7, &s).verdict;
    let a = rank_one_random_scan(&aubert(), 10_000, 7, &s).verdict;
    let n2 = frobenius_squared();
    let poly = PolyGrids::default().run(&n2).verdict;
    let pts = PolyGrids::points(&DomainGrid::square(-2.0, 2.0, 21));
    let mut worst = f64::INFINITY;
    for &g in &pts {
        for &n in &pts {
            worst = worst.min(minorant_residual(&n2, g, n, 0.0).unwrap());
        }
    }
    let ok = w == Verdict::NoViolationFound
        && a == Verdict::NoViolationFound
        && poly == Verdict::NoViolationFound
        && worst >= -1e-12;
    outcome(
        ok,
        format!("random scans W0 {w}, aubert {a}; norm2 polyconvexity {poly}, min minorant residual {worst:e}"),
    )
}

fn criterion_8() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_convexlab"))
        .arg("reproduce-paper")
        .env("CONVEXLAB_THREADS", "4")
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let parsed = ReproduceReport::from_json(&stdout);
    let round_trip = parsed.as_ref().is_ok_and(|r| r.to_json() == stdout.trim_end());
    let passed = parsed.as_ref().is_ok_and(|r| r.passed && r.schema_version == 1 && r.items.len() == 7);
    outcome(
        out.status.code() == Some(0) && round_trip && passed,
        format!("exit {:?}, round trip {round_trip}, all items pass {passed}", out.status.code()),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("contradiction at gamma = (e^4, e^3)", criterion_1, Duration::from_secs(1)),
        ("split rank-one criterion for W0", criterion_2, Duration::from_secs(1)),
        ("ADM threshold bracketing", criterion_3, Duration::from_secs(30)),
        ("compactness dichotomy", criterion_4, Duration::from_secs(5)),
        ("connecting paths", criterion_5, Duration::from_secs(10)),
        ("grid connectivity", criterion_6, Duration::from_secs(60)),
        ("cross-method consistency", criterion_7, Duration::from_secs(60)),
        ("reproduce-paper run", criterion_8, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, limit)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let elapsed = t.elapsed();
        let ok = o.passed && elapsed <= limit;
        println!(
            "criterion {}: {} {name} ({:.3} s, limit {} s) {}",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            o.detail
        );
        if !ok {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
