//! Rank-one convexity: the closed-form criterion for split energies and
//! numeric second-difference scans along rank-one (and arbitrary) lines.

use nalgebra::{Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{logspace, DomainGrid, OrderedSVEnergy, Smoothness, VolIsoSplitEnergy};
use crate::error::{Error, Result};
use crate::planar::{rank_one_matrix, Mat2, RankOneDir};
use crate::verdict::Verdict;

/// Margins at or above this count as nonnegative.
pub const PASS_TOLERANCE: f64 = -1e-9;
/// Window around `t = 1` excluded from condition iii.
pub const T1_WINDOW: f64 = 1e-6;

/// `n` log-spaced samples on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl LogGrid {
    pub const INFIMUM: LogGrid = LogGrid {
        lo: 1e-8,
        hi: 1e8,
        n: 4001,
    };
    pub const CRITERION: LogGrid = LogGrid {
        lo: 1e-3,
        hi: 1e3,
        n: 2000,
    };

    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 3 {
            return Err(Error::Domain(format!(
                "log grid needs 0 < lo < hi and at least 3 points, got [{lo}, {hi}] with {n}"
            )));
        }
        Ok(LogGrid { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        let mut p = logspace(self.lo, self.hi, self.n);
        p[0] = self.lo;
        p[self.n - 1] = self.hi;
        p
    }
}

/// Numeric infimum of `t² g″(t)` over a log grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfimumEstimate {
    /// Grid minimum after local refinement.
    pub numeric: f64,
    pub argmin: f64,
    /// Registered closed form, if any.
    pub closed_form: Option<f64>,
    /// Closed form when registered, numeric otherwise.
    pub value: f64,
    /// The minimum sits at a grid end, strictly below all interior samples.
    pub at_boundary: bool,
    /// Decade increments toward the boundary do not shrink.
    pub unbounded_below: bool,
    pub samples: usize,
    pub skipped: usize,
}

impl InfimumEstimate {
    /// The value entering the criterion: `−∞` when unbounded below.
    pub fn effective(&self) -> f64 {
        if self.unbounded_below {
            f64::NEG_INFINITY
        } else {
            self.value
        }
    }
}

/// `inf t² g″(t)` with `g″` given directly. `smoothness` is the claim
/// registered for `g`; anything below C² is refused.
pub fn infimum_t2_g2(
    label: &str,
    second: &(dyn Fn(f64) -> f64 + Sync),
    smoothness: Smoothness,
    seams: &[f64],
    grid: &LogGrid,
    closed_form: Option<f64>,
) -> Result<InfimumEstimate> {
    if smoothness < Smoothness::C2 {
        return Err(Error::Smoothness {
            energy: label.to_string(),
            claimed: smoothness,
            required: Smoothness::C2,
        });
    }
    let near_seam = |t: f64| seams.iter().any(|s| (t - s).abs() <= 1e-9 * s.abs().max(1.0));
    let all = grid.points();
    let pts: Vec<f64> = all.iter().copied().filter(|&t| !near_seam(t)).collect();
    let skipped = all.len() - pts.len();
    if pts.len() < 3 {
        return Err(Error::Precondition(format!("`{label}`: fewer than 3 usable grid points")));
    }
    let q = |t: f64| t * t * second(t);
    let vals: Vec<f64> = pts.iter().map(|&t| q(t)).collect();
    if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!(
            "`{label}`: t^2 g''(t) is not finite at t = {}",
            pts[i]
        )));
    }
    let n = vals.len();
    let mut k = 0;
    for i in 1..n {
        if vals[i] < vals[k] {
            k = i;
        }
    }
    let interior_min = vals[1..n - 1].iter().copied().fold(f64::INFINITY, f64::min);
    let at_boundary =
        (k == 0 || k == n - 1) && vals[k] < interior_min - 1e-12 * vals[k].abs().max(interior_min.abs());

    let mut numeric = vals[k];
    let mut argmin = pts[k];
    let mut unbounded_below = false;
    if at_boundary {
        let per_decade = ((n - 1) as f64 / (grid.hi / grid.lo).log10()).round().max(1.0) as usize;
        if n > 2 * per_decade {
            let (e0, e1, e2) = if k == 0 {
                (0, per_decade, 2 * per_decade)
            } else {
                (n - 1, n - 1 - per_decade, n - 1 - 2 * per_decade)
            };
            let d1 = vals[e0] - vals[e1];
            let d0 = vals[e1] - vals[e2];
            unbounded_below = d1 < 0.0 && d1.abs() >= 0.9 * d0.abs();
        }
    } else {
        let (mut lo, mut hi) = (pts[k.saturating_sub(1)], pts[(k + 1).min(n - 1)]);
        for _ in 0..3 {
            let local = logspace(lo, hi, 101);
            let mut best = 0;
            let local_vals: Vec<f64> = local.iter().map(|&t| q(t)).collect();
            for i in 1..local.len() {
                if local_vals[i] < local_vals[best] {
                    best = i;
                }
            }
            if local_vals[best] < numeric && !near_seam(local[best]) {
                numeric = local_vals[best];
                argmin = local[best];
            }
            lo = local[best.saturating_sub(1)];
            hi = local[(best + 1).min(local.len() - 1)];
        }
    }

    if let Some(cf) = closed_form {
        if !unbounded_below && (numeric - cf).abs() > 1e-6 {
            return Err(Error::Precondition(format!(
                "`{label}`: numeric infimum {numeric} disagrees with registered closed form {cf}"
            )));
        }
    }
    Ok(InfimumEstimate {
        numeric,
        argmin,
        closed_form,
        value: closed_form.unwrap_or(numeric),
        at_boundary,
        unbounded_below,
        samples: pts.len(),
        skipped,
    })
}

/// Outcome of one condition of the split criterion on its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub passed: bool,
    /// Smallest margin; for disjunctive conditions the per-point margin is
    /// the larger of the two disjuncts.
    pub worst_margin: Option<f64>,
    pub witness_t: Option<f64>,
    pub points: usize,
    pub first_disjunct_held: usize,
    pub second_disjunct_held: usize,
    /// Largest `|first disjunct|` over the grid.
    pub max_abs_first_disjunct: Option<f64>,
    pub points_below_one: usize,
    pub points_above_one: usize,
}

impl ConditionReport {
    fn new() -> Self {
        ConditionReport {
            passed: true,
            worst_margin: None,
            witness_t: None,
            points: 0,
            first_disjunct_held: 0,
            second_disjunct_held: 0,
            max_abs_first_disjunct: None,
            points_below_one: 0,
            points_above_one: 0,
        }
    }

    fn record(&mut self, t: f64, first: f64, second: Option<f64>) {
        let margin = match second {
            Some(s) => first.max(s),
            None => first,
        };
        self.points += 1;
        if t < 1.0 {
            self.points_below_one += 1;
        } else if t > 1.0 {
            self.points_above_one += 1;
        }
        if first >= PASS_TOLERANCE {
            self.first_disjunct_held += 1;
        } else if second.is_some_and(|s| s >= PASS_TOLERANCE) {
            self.second_disjunct_held += 1;
        }
        self.max_abs_first_disjunct = Some(self.max_abs_first_disjunct.unwrap_or(0.0).max(first.abs()));
        if self.worst_margin.is_none_or(|w| margin < w) {
            self.worst_margin = Some(margin);
            self.witness_t = Some(t);
        }
        if !(margin >= PASS_TOLERANCE) {
            self.passed = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCriterionReport {
    pub energy: String,
    pub h0: InfimumEstimate,
    pub f0: InfimumEstimate,
    /// `h₀ + f₀ ≥ 0`.
    pub condition_i: ConditionReport,
    /// `h′(t) ≥ 0` for `t ≥ 1`.
    pub condition_ii: ConditionReport,
    pub condition_iii: ConditionReport,
    pub condition_iv: ConditionReport,
    pub grid: LogGrid,
    pub notices: Vec<String>,
    pub verdict: Verdict,
}

/// The disjuncts of conditions iii and iv at `t`, given `h′`, `h″` and `f₀`.
pub fn criterion_terms(t: f64, hp: f64, hpp: f64, f0: f64) -> CriterionTerms {
    let a = t * t * (t * t - 1.0) * hp * hpp - 2.0 * t * hp * hp;
    let b = (t * t + 3.0) * hp + 2.0 * t * (t * t + 1.0) * hpp;
    let c = 4.0 * t * (hp + t * hpp);
    CriterionTerms {
        iii_first: 2.0 * t / (t - 1.0) * hp - t * t * hpp + f0,
        iii_second: a + (b - c) * f0,
        iv_first: 2.0 * t / (t + 1.0) * hp + t * t * hpp - f0,
        iv_second: a + (b + c) * f0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionTerms {
    pub iii_first: f64,
    pub iii_second: f64,
    pub iv_first: f64,
    pub iv_second: f64,
}

/// Evaluates conditions i to iv for `W = h(K) + f(det)` on `grid`, plus
/// `t = 1` for conditions ii and iv.
pub fn split_rank_one_criterion(e: &VolIsoSplitEnergy, grid: &LogGrid) -> Result<SplitCriterionReport> {
    if e.smoothness() < Smoothness::C2 {
        return Err(Error::Smoothness {
            energy: e.name().to_string(),
            claimed: e.smoothness(),
            required: Smoothness::C2,
        });
    }
    let mut h_seams: Vec<f64> = Vec::new();
    for &s in e.iso().seams() {
        h_seams.push(s);
        h_seams.push(1.0 / s);
    }
    let h0 = infimum_t2_g2(
        &format!("{} h", e.name()),
        &|t| e.h_second(t),
        e.iso().smoothness(),
        &h_seams,
        &LogGrid::INFIMUM,
        e.closed_form_h0(),
    )?;
    let f0 = infimum_t2_g2(
        &format!("{} f", e.name()),
        &|t| e.f_second(t),
        e.vol().smoothness(),
        e.vol().seams(),
        &LogGrid::INFIMUM,
        e.closed_form_f0(),
    )?;
    let mut notices = Vec::new();
    if h0.unbounded_below {
        notices.push(format!("t^2 h''(t) appears unbounded below near t = {}", h0.argmin));
    }
    if f0.unbounded_below {
        notices.push(format!("t^2 f''(t) appears unbounded below near t = {}", f0.argmin));
    }

    let mut cond_i = ConditionReport::new();
    let sum = h0.effective() + f0.effective();
    cond_i.points = 1;
    cond_i.passed = sum >= PASS_TOLERANCE;
    cond_i.worst_margin = Some(if sum.is_finite() { sum } else { h0.numeric + f0.numeric });

    let f0v = f0.effective();
    let mut pts = grid.points();
    if !pts.contains(&1.0) && grid.lo < 1.0 && grid.hi > 1.0 {
        pts.push(1.0);
        pts.sort_by(f64::total_cmp);
    }
    let mut cond_ii = ConditionReport::new();
    let mut cond_iii = ConditionReport::new();
    let mut cond_iv = ConditionReport::new();
    let mut seam_skips = 0;
    for &t in &pts {
        if h_seams.iter().any(|s| (t - s).abs() <= 1e-9 * s.max(1.0)) {
            seam_skips += 1;
            continue;
        }
        let hp = e.h_prime(t);
        let hpp = e.h_second(t);
        if t >= 1.0 {
            cond_ii.record(t, hp, None);
        }
        if !f0v.is_finite() {
            continue;
        }
        let terms = criterion_terms(t, hp, hpp, f0v);
        if (t - 1.0).abs() >= T1_WINDOW {
            cond_iii.record(t, terms.iii_first, Some(terms.iii_second));
        }
        cond_iv.record(t, terms.iv_first, Some(terms.iv_second));
    }
    if seam_skips > 0 {
        notices.push(format!("{seam_skips} grid points on a seam of h were skipped"));
    }
    if !f0v.is_finite() {
        cond_iii.passed = false;
        cond_iv.passed = false;
        notices.push("conditions iii and iv not evaluated: f0 is not finite".into());
    }
    let all = cond_i.passed && cond_ii.passed && cond_iii.passed && cond_iv.passed;
    Ok(SplitCriterionReport {
        energy: e.name().to_string(),
        h0,
        f0,
        condition_i: cond_i,
        condition_ii: cond_ii,
        condition_iii: cond_iii,
        condition_iv: cond_iv,
        grid: *grid,
        notices,
        verdict: if all { Verdict::Pass } else { Verdict::Fail },
    })
}

/// Central second difference of `s ↦ W(F + sH)` at `s = t`, with `H` realized
/// from `d`. Every stencil point must lie in GL⁺(2).
pub fn rank_one_second_difference(
    e: &OrderedSVEnergy,
    f: &Mat2,
    d: &RankOneDir,
    t: f64,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let h = rank_one_matrix(d);
    let mut w = [0.0; 3];
    for (k, s) in [t - step, t, t + step].into_iter().enumerate() {
        let x = *f + s * h;
        if !(x.det() > 0.0) {
            return Err(Error::Domain(format!(
                "segment leaves GL+(2) at s = {s} (det = {:e})",
                x.det()
            )));
        }
        w[k] = e.eval_matrix(&x)?;
    }
    Ok((w[2] - 2.0 * w[1] + w[0]) / (step * step))
}

/// Rounding floor for a second difference of values `w` with step `δ`.
fn noise_floor(w: &[f64; 3], step: f64) -> f64 {
    64.0 * f64::EPSILON * (w[0].abs() + 2.0 * w[1].abs() + w[2].abs()) / (step * step)
}

fn second_difference_along(
    eval: &dyn Fn(&Mat2) -> Result<f64>,
    f: &Mat2,
    h: &Mat2,
    t: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let mut w = [0.0; 3];
    for (k, s) in [t - step, t, t + step].into_iter().enumerate() {
        w[k] = eval(&(*f + s * *h))?;
    }
    Ok(((w[2] - 2.0 * w[1] + w[0]) / (step * step), noise_floor(&w, step)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineScanWitness {
    pub base: Mat2,
    pub direction: RankOneDir,
    pub t: f64,
    pub step: f64,
    pub second_difference: f64,
    pub threshold: f64,
}

/// Witness of a convexity violation along an arbitrary direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionWitness {
    pub base: Mat2,
    pub direction: Mat2,
    pub step: f64,
    pub second_difference: f64,
    pub threshold: f64,
}

/// Sampler settings. Bases are `diag(λ₁, λ₂)` on the ordered nodes of
/// `bases`; isotropy covers the rotated bases through the direction set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub bases: DomainGrid,
    /// Angles per axis for rank-one directions on `[0, π)²`.
    pub angles: usize,
    /// Hyperspherical angles for full directions.
    pub sphere: [usize; 3],
    /// Finite-difference step as a fraction of `λ̂₂` at the base point.
    pub step_fraction: f64,
    pub tolerance: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            bases: DomainGrid::square(-2.0, 2.0, 41),
            angles: 24,
            sphere: [12, 12, 24],
            step_fraction: 0.01,
            tolerance: 1e-8,
        }
    }
}

impl ScanSettings {
    pub fn resolution(&self) -> String {
        format!(
            "bases {}x{} on u,v in [{}, {}]; rank-one directions {}x{}; step {} * lambda2",
            self.bases.n_u,
            self.bases.n_v,
            self.bases.u_min,
            self.bases.u_max,
            self.angles,
            self.angles,
            self.step_fraction
        )
    }

    pub fn rank_one_directions(&self) -> Vec<RankOneDir> {
        let n = self.angles;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let th = std::f64::consts::PI * i as f64 / n as f64;
                let ph = std::f64::consts::PI * j as f64 / n as f64;
                out.push(RankOneDir::unit(th, ph));
            }
        }
        out
    }

    /// Unit-Frobenius directions from hyperspherical angles.
    pub fn sphere_directions(&self) -> Vec<Mat2> {
        use std::f64::consts::PI;
        let [n1, n2, n3] = self.sphere;
        let mut out = Vec::with_capacity(n1 * n2 * n3);
        for i in 0..n1 {
            let p1 = PI * i as f64 / n1 as f64;
            for j in 0..n2 {
                let p2 = PI * j as f64 / n2 as f64;
                for k in 0..n3 {
                    let p3 = 2.0 * PI * k as f64 / n3 as f64;
                    out.push(Mat2::raw(
                        p1.cos(),
                        p1.sin() * p2.cos(),
                        p1.sin() * p2.sin() * p3.cos(),
                        p1.sin() * p2.sin() * p3.sin(),
                    ));
                }
            }
        }
        out
    }

    fn base_points(&self) -> Vec<Mat2> {
        self.bases
            .ordered_points()
            .into_iter()
            .map(|p| Mat2::diag(p.lambda1, p.lambda2))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub energy: String,
    pub verdict: Verdict,
    pub resolution: String,
    pub evaluations: usize,
    /// Smallest second difference seen, divided by `λ̂₁²` of its base.
    pub min_scaled_second_difference: Option<f64>,
    pub witness: Option<LineScanWitness>,
    pub direction_witness: Option<DirectionWitness>,
}

struct Partial<W> {
    witness: Option<W>,
    evaluations: usize,
    min_scaled: f64,
}

fn merge<W>(parts: Vec<Partial<W>>) -> (Option<W>, usize, Option<f64>) {
    let mut witness = None;
    let mut evaluations = 0;
    let mut min_scaled = f64::INFINITY;
    for p in parts {
        evaluations += p.evaluations;
        min_scaled = min_scaled.min(p.min_scaled);
        if witness.is_none() {
            witness = p.witness;
        }
    }
    (witness, evaluations, min_scaled.is_finite().then_some(min_scaled))
}

fn verdict_of<W>(w: &Option<W>) -> Verdict {
    if w.is_some() {
        Verdict::Fail
    } else {
        Verdict::NoViolationFound
    }
}

fn rank_one_at(
    e: &OrderedSVEnergy,
    base: &Mat2,
    dir: &RankOneDir,
    t: f64,
    step: f64,
    tolerance: f64,
) -> Option<(f64, Option<LineScanWitness>)> {
    let h = rank_one_matrix(dir);
    let (value, noise) =
        second_difference_along(&|x: &Mat2| e.eval_matrix(x), base, &h, t, step).ok()?;
    let threshold = tolerance + noise;
    let witness = (value < -threshold).then_some(LineScanWitness {
        base: *base,
        direction: *dir,
        t,
        step,
        second_difference: value,
        threshold,
    });
    Some((value, witness))
}

/// Second differences along every rank-one direction at every base point.
/// The reported witness is the first violation in base-major, direction-minor
/// order, independent of scheduling.
pub fn rank_one_scan(e: &OrderedSVEnergy, settings: &ScanSettings) -> ScanReport {
    let bases = settings.base_points();
    let dirs = settings.rank_one_directions();
    let parts: Vec<Partial<LineScanWitness>> = bases
        .par_iter()
        .map(|base| {
            let l2 = base.a22();
            let scale = base.a11() * base.a11();
            let step = settings.step_fraction * l2;
            let mut part = Partial {
                witness: None,
                evaluations: 0,
                min_scaled: f64::INFINITY,
            };
            for d in &dirs {
                if let Some((v, w)) = rank_one_at(e, base, d, 0.0, step, settings.tolerance) {
                    part.evaluations += 1;
                    part.min_scaled = part.min_scaled.min(v / scale);
                    if part.witness.is_none() {
                        part.witness = w;
                    }
                }
            }
            part
        })
        .collect();
    let (witness, evaluations, min_scaled) = merge(parts);
    ScanReport {
        energy: e.name().to_string(),
        verdict: verdict_of(&witness),
        resolution: settings.resolution(),
        evaluations,
        min_scaled_second_difference: min_scaled,
        witness,
        direction_witness: None,
    }
}

/// Random admissible triples `(F, H, t)`: `F = R₁ diag(λ) R₂` with
/// `ln λ ∈ [−2, 2]`, unit rank-one `H`, and `|t| ≤ λ̂₂/2` so the stencil stays
/// in GL⁺(2). Seeded, so the sample set is reproducible.
pub fn rank_one_random_scan(
    e: &OrderedSVEnergy,
    samples: usize,
    seed: u64,
    settings: &ScanSettings,
) -> ScanReport {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<(Mat2, RankOneDir, f64, f64)> = (0..samples)
        .map(|_| {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            let (l1, l2) = (a.max(b).exp(), a.min(b).exp());
            let base = Mat2::rotation(rng.gen_range(-PI..PI))
                * Mat2::diag(l1, l2)
                * Mat2::rotation(rng.gen_range(-PI..PI));
            let dir = RankOneDir::unit(rng.gen_range(0.0..PI), rng.gen_range(0.0..PI));
            let t = rng.gen_range(-0.5..0.5) * l2;
            (base, dir, t, l2)
        })
        .collect();
    let parts: Vec<Partial<LineScanWitness>> = triples
        .par_iter()
        .map(|(base, dir, t, l2)| {
            let step = settings.step_fraction * l2;
            match rank_one_at(e, base, dir, *t, step, settings.tolerance) {
                Some((v, w)) => Partial {
                    witness: w,
                    evaluations: 1,
                    min_scaled: v / base.operator_norm().powi(2),
                },
                None => Partial {
                    witness: None,
                    evaluations: 0,
                    min_scaled: f64::INFINITY,
                },
            }
        })
        .collect();
    let (witness, evaluations, min_scaled) = merge(parts);
    ScanReport {
        energy: e.name().to_string(),
        verdict: verdict_of(&witness),
        resolution: format!(
            "{samples} random triples (seed {seed}); step {} * lambda2",
            settings.step_fraction
        ),
        evaluations,
        min_scaled_second_difference: min_scaled,
        witness,
        direction_witness: None,
    }
}

/// Finite-difference Hessian of `eval` at `f` in the entry basis.
fn hessian(eval: &dyn Fn(&Mat2) -> Result<f64>, f: &Mat2, step: f64) -> Result<Matrix4<f64>> {
    let basis = [
        Mat2::raw(1.0, 0.0, 0.0, 0.0),
        Mat2::raw(0.0, 1.0, 0.0, 0.0),
        Mat2::raw(0.0, 0.0, 1.0, 0.0),
        Mat2::raw(0.0, 0.0, 0.0, 1.0),
    ];
    let mut h = Matrix4::zeros();
    for i in 0..4 {
        for j in i..4 {
            let (ei, ej) = (step * basis[i], step * basis[j]);
            let v = (eval(&(*f + ei + ej))? - eval(&(*f + ei - ej))? - eval(&(*f - ei + ej))?
                + eval(&(*f - ei - ej))?)
                / (4.0 * step * step);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

/// Second differences along arbitrary unit-Frobenius directions: the
/// hyperspherical grid plus, at each base, the lowest eigenvector of a
/// finite-difference Hessian. Uses the ℝ^{2×2} extension when registered.
/// A violation is reported only from a direct second difference.
pub fn convexity_scan(e: &OrderedSVEnergy, settings: &ScanSettings) -> ScanReport {
    let bases = settings.base_points();
    let dirs = settings.sphere_directions();
    let eval = |x: &Mat2| e.eval_extended(x);
    let parts: Vec<Partial<DirectionWitness>> = bases
        .par_iter()
        .map(|base| {
            let step = settings.step_fraction * base.a22();
            let scale = base.a11() * base.a11();
            let mut candidates = dirs.clone();
            if let Ok(hess) = hessian(&eval, base, step) {
                let eig = SymmetricEigen::new(hess);
                let k = eig.eigenvalues.imin();
                let v = eig.eigenvectors.column(k);
                if v.iter().all(|x| x.is_finite()) {
                    candidates.push(Mat2::raw(v[0], v[1], v[2], v[3]));
                }
            }
            let mut part = Partial {
                witness: None,
                evaluations: 0,
                min_scaled: f64::INFINITY,
            };
            for h in &candidates {
                let Ok((value, noise)) = second_difference_along(&eval, base, h, 0.0, step) else {
                    continue;
                };
                part.evaluations += 1;
                part.min_scaled = part.min_scaled.min(value / scale);
                let threshold = settings.tolerance + noise;
                if part.witness.is_none() && value < -threshold {
                    part.witness = Some(DirectionWitness {
                        base: *base,
                        direction: *h,
                        step,
                        second_difference: value,
                        threshold,
                    });
                }
            }
            part
        })
        .collect();
    let (witness, evaluations, min_scaled) = merge(parts);
    let [n1, n2, n3] = settings.sphere;
    ScanReport {
        energy: e.name().to_string(),
        verdict: verdict_of(&witness),
        resolution: format!(
            "bases {}x{} on u,v in [{}, {}]; directions {n1}x{n2}x{n3} plus Hessian eigenvector; step {} * lambda2",
            settings.bases.n_u, settings.bases.n_v, settings.bases.u_min, settings.bases.u_max,
            settings.step_fraction
        ),
        evaluations,
        min_scaled_second_difference: min_scaled,
        witness: None,
        direction_witness: witness,
    }
}
