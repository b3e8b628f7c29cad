//! Sublevel sets `S_c = {F ∈ GL⁺(2) : W(F) ≤ c}`: compactness from growth,
//! explicit connecting paths, q-convexity and grid connectivity.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::energy::{logspace, DomainGrid, OrderedSVEnergy, VolIsoSplitEnergy};
use crate::error::{Error, Result};
use crate::planar::{linear_distortion, svd_ordered, Mat2};
use crate::verdict::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    Infinity,
    Zero,
}

/// Tail samples `t = 10^{±k}`, `k = 1..=decades`. Growth is accepted when
/// the last `window` increments are positive and each is at least
/// `min_ratio` times the previous one, so geometric convergence to a finite
/// limit is rejected while logarithmic growth passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthSchedule {
    pub decades: u32,
    pub window: u32,
    pub min_ratio: f64,
}

impl Default for GrowthSchedule {
    fn default() -> Self {
        GrowthSchedule {
            decades: 12,
            window: 6,
            min_ratio: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub label: String,
    pub tail: Tail,
    pub passed: bool,
    /// `(t, g(t))` along the tail.
    pub samples: Vec<(f64, f64)>,
    pub counter_sample: Option<(f64, f64)>,
    pub scale: String,
}

/// Numeric evidence that `g(t) → ∞` along the tail.
pub fn growth_check(label: &str, g: &dyn Fn(f64) -> f64, tail: Tail, schedule: &GrowthSchedule) -> GrowthVerdict {
    let samples: Vec<(f64, f64)> = (1..=schedule.decades as i32)
        .map(|k| {
            let t = match tail {
                Tail::Infinity => 10f64.powi(k),
                Tail::Zero => 10f64.powi(-k),
            };
            (t, g(t))
        })
        .collect();
    let n = samples.len();
    let window = (schedule.window as usize).min(n.saturating_sub(1));
    let mut counter = None;
    if let Some(bad) = samples.iter().find(|s| !s.1.is_finite()) {
        counter = Some(*bad);
    } else {
        let start = n - 1 - window;
        let mut prev: Option<f64> = None;
        for k in start..n - 1 {
            let inc = samples[k + 1].1 - samples[k].1;
            let shrinking = prev.is_some_and(|p| inc < schedule.min_ratio * p);
            if !(inc > 0.0) || shrinking {
                counter = Some(samples[k + 1]);
                break;
            }
            prev = Some(inc);
        }
    }
    let last = samples.last().map_or(0.0, |s| s.0);
    GrowthVerdict {
        label: label.to_string(),
        tail,
        passed: counter.is_none(),
        samples,
        counter_sample: counter,
        scale: format!("numeric evidence at scale t = {last:e}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EscapeKind {
    /// `det → 0`
    Boundary,
    /// `|F| → ∞`
    Unbounded,
    Both,
}

/// A sequence `X_n` leaving every compact subset of GL⁺(2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeSample {
    pub family: String,
    pub kind: EscapeKind,
    /// `W(X_n) ≤ c` along the whole tail of the sampled sequence.
    pub enters: bool,
    pub first_n: Option<f64>,
    pub counter_sample: Option<Mat2>,
    pub last_value: f64,
}

const ESCAPE_FAMILIES: [(&str, EscapeKind); 5] = [
    ("(1/n)*id", EscapeKind::Boundary),
    ("diag(1, 1/n)", EscapeKind::Boundary),
    ("diag(n, 1/n)", EscapeKind::Both),
    ("n*id", EscapeKind::Unbounded),
    ("diag(n, 1)", EscapeKind::Unbounded),
];

fn escape_member(family: usize, n: f64) -> Mat2 {
    match family {
        0 => Mat2::diag(1.0 / n, 1.0 / n),
        1 => Mat2::diag(1.0, 1.0 / n),
        2 => Mat2::diag(n, 1.0 / n),
        3 => Mat2::diag(n, n),
        _ => Mat2::diag(n, 1.0),
    }
}

/// Evaluates the escape families at `n = 2^k`, `k = 1..=20`. A family enters
/// `S_c` when its last samples all lie in `S_c`.
pub fn escape_sequences(e: &OrderedSVEnergy, c: f64) -> Vec<EscapeSample> {
    const TAIL: usize = 5;
    ESCAPE_FAMILIES
        .iter()
        .enumerate()
        .map(|(idx, (name, kind))| {
            let ns: Vec<f64> = (1..=20).map(|k| 2f64.powi(k)).collect();
            let vals: Vec<f64> = ns
                .iter()
                .map(|&n| e.eval_matrix(&escape_member(idx, n)).unwrap_or(f64::NAN))
                .collect();
            let inside = |v: f64| v <= c;
            let enters = vals[vals.len() - TAIL..].iter().all(|&v| inside(v));
            let mut first = None;
            if enters {
                let mut k = vals.len();
                while k > 0 && inside(vals[k - 1]) {
                    k -= 1;
                }
                first = Some(k);
            }
            EscapeSample {
                family: name.to_string(),
                kind: *kind,
                enters,
                first_n: first.map(|k| ns[k]),
                counter_sample: first.map(|k| escape_member(idx, ns[k])),
                last_value: *vals.last().unwrap_or(&f64::NAN),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub energy: String,
    pub level: f64,
    /// `ĥ(t), t → ∞`; `f(t), t → ∞`; `f(t), t → 0` for split energies.
    pub growth: Vec<GrowthVerdict>,
    /// Common lower bound `d` of `ĥ` and `f`.
    pub lower_bound: Option<f64>,
    /// `K(F) < distortion_bound` on `S_c`.
    pub distortion_bound: Option<f64>,
    /// `det_bounds.0 < det F < det_bounds.1` on `S_c`.
    pub det_bounds: Option<(f64, f64)>,
    /// Operator-norm radius: `|||F||| < radius` on `S_c`.
    pub radius: Option<f64>,
    /// `λ̂₂(F) ≥ boundary_margin` on `S_c`; `0` when the boundary is reached.
    pub boundary_margin: Option<f64>,
    pub escapes: Vec<EscapeSample>,
    pub bounded: Option<bool>,
    pub separated: Option<bool>,
    /// Registered closed-form growth flags are consistent with the escapes.
    pub growth_flags_agree: Option<bool>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

fn apply_escapes(report: &mut CompactnessReport, e: &OrderedSVEnergy) {
    let escapes = escape_sequences(e, report.level);
    let unbounded = escapes
        .iter()
        .any(|s| s.enters && matches!(s.kind, EscapeKind::Unbounded | EscapeKind::Both));
    let boundary = escapes
        .iter()
        .any(|s| s.enters && matches!(s.kind, EscapeKind::Boundary | EscapeKind::Both));
    if unbounded {
        report.bounded = Some(false);
        report.radius = None;
    }
    if boundary {
        report.separated = Some(false);
        report.boundary_margin = Some(0.0);
    }
    if let Some(flags) = e.growth() {
        report.growth_flags_agree =
            Some(!(flags.coercive && unbounded) && !(flags.boundary_blowup && boundary));
    }
    for s in escapes.iter().filter(|s| s.enters) {
        report.notes.push(format!(
            "{} stays in the sublevel set from n = {}",
            s.family,
            s.first_n.unwrap_or(f64::NAN)
        ));
    }
    report.escapes = escapes;
}

/// Constructive compactness argument for `W = ĥ(K) + f(det)`: with `d` a
/// lower bound of `ĥ` and `f`, every `F ∈ S_c` has `ĥ(K) ≤ c − d` and
/// `f(det) ≤ c − d`, which bound `K` and `det` from above and `det` from
/// below. Then `|||F|||² = K det` gives the radius and `λ̂₂² = det / K` the
/// boundary margin.
pub fn compactness_check(e: &VolIsoSplitEnergy, c: f64) -> CompactnessReport {
    let schedule = GrowthSchedule::default();
    let growth = vec![
        growth_check("h(t), t -> inf", &|t| e.hhat(t), Tail::Infinity, &schedule),
        growth_check("f(t), t -> inf", &|t| e.f(t), Tail::Infinity, &schedule),
        growth_check("f(t), t -> 0", &|t| e.f(t), Tail::Zero, &schedule),
    ];
    let mut report = CompactnessReport {
        energy: e.name().to_string(),
        level: c,
        growth,
        lower_bound: None,
        distortion_bound: None,
        det_bounds: None,
        radius: None,
        boundary_margin: None,
        escapes: Vec::new(),
        bounded: None,
        separated: None,
        growth_flags_agree: None,
        notes: Vec::new(),
        verdict: Verdict::Fail,
    };
    let growth_ok = report.growth.iter().all(|g| g.passed);

    let k_grid = logspace(1.0, 1e12, 12 * 200 + 1);
    let d_grid = logspace(1e-12, 1e12, 24 * 200 + 1);
    let hv: Vec<f64> = k_grid.iter().map(|&t| e.hhat(t)).collect();
    let fv: Vec<f64> = d_grid.iter().map(|&t| e.f(t)).collect();
    let argmin = |v: &[f64]| {
        let mut k = 0;
        for i in 1..v.len() {
            if v[i] < v[k] {
                k = i;
            }
        }
        k
    };
    let (kh, kf) = (argmin(&hv), argmin(&fv));
    let finite = hv.iter().chain(fv.iter()).all(|v| v.is_finite());
    if !finite {
        report.notes.push("h or f is not finite on the sampled domain".into());
    } else if kh == hv.len() - 1 || kf == 0 || kf == fv.len() - 1 {
        report
            .notes
            .push("h or f attains its sampled minimum at the edge of the domain; no lower bound d".into());
    } else {
        let d = hv[kh].min(fv[kf]);
        report.lower_bound = Some(d);
        let cap = c - d;
        let k_hi = hv.iter().rposition(|&v| v <= cap);
        let f_hi = fv.iter().rposition(|&v| v <= cap);
        let f_lo = fv.iter().position(|&v| v <= cap);
        match (k_hi, f_lo, f_hi) {
            (_, None, _) | (None, _, _) | (_, _, None) => {
                report.notes.push(format!("sublevel set S_{c} is empty on the sampled domain"));
                report.distortion_bound = Some(1.0);
                report.det_bounds = Some((d_grid[0], d_grid[0]));
            }
            (Some(ki), Some(lo), Some(hi)) => {
                if ki + 1 >= k_grid.len() {
                    report.notes.push("h stays below c - d up to the end of the sampled range".into());
                } else if lo == 0 || hi + 1 >= d_grid.len() {
                    report.notes.push("f stays below c - d up to the end of the sampled range".into());
                } else {
                    let kb = k_grid[ki + 1];
                    let (dl, dh) = (d_grid[lo - 1], d_grid[hi + 1]);
                    report.distortion_bound = Some(kb);
                    report.det_bounds = Some((dl, dh));
                    report.radius = Some((kb * dh).sqrt());
                    report.boundary_margin = Some((dl / kb).sqrt());
                    report.bounded = Some(true);
                    report.separated = Some(true);
                }
            }
        }
    }
    apply_escapes(&mut report, &e.to_ordered());
    let certified = growth_ok
        && report.radius.is_some()
        && report.boundary_margin.is_some_and(|m| m > 0.0)
        && report.escapes.iter().all(|s| !s.enters);
    report.verdict = if certified { Verdict::Pass } else { Verdict::Fail };
    if report.distortion_bound == Some(1.0) && report.radius.is_none() && growth_ok {
        report.verdict = Verdict::Pass;
    }
    report
}

/// Compactness evidence for an energy given only in ordered form: escape
/// sequences towards `det → 0` and `|F| → ∞`. A sequence staying in `S_c`
/// refutes compactness; otherwise the outcome is `NoViolationFound`.
pub fn ordered_compactness_check(e: &OrderedSVEnergy, c: f64) -> CompactnessReport {
    let mut report = CompactnessReport {
        energy: e.name().to_string(),
        level: c,
        growth: Vec::new(),
        lower_bound: None,
        distortion_bound: None,
        det_bounds: None,
        radius: None,
        boundary_margin: None,
        escapes: Vec::new(),
        bounded: None,
        separated: None,
        growth_flags_agree: None,
        notes: Vec::new(),
        verdict: Verdict::NoViolationFound,
    };
    apply_escapes(&mut report, e);
    if report.escapes.iter().any(|s| s.enters) {
        report.verdict = Verdict::Fail;
    }
    report
}

/// A named continuous curve on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Curve {
    /// `rot(s·left) · core · rot(s·right)`
    Rotation {
        label: String,
        left_angle: f64,
        core: Mat2,
        right_angle: f64,
    },
    /// `diag(λ₁^{1−s} μ₁^s, λ₂^{1−s} μ₂^s)`
    DistortionDescent { from: (f64, f64), to: (f64, f64) },
    /// `ρ^s · diag(μ₁, μ₂)`
    ConformalScaling { base: (f64, f64), rho: f64 },
    /// `diag((1−s)·from + s·to)`
    Diagonal {
        label: String,
        from: (f64, f64),
        to: (f64, f64),
    },
}

impl Curve {
    pub fn eval(&self, s: f64) -> Mat2 {
        match self {
            Curve::Rotation {
                left_angle,
                core,
                right_angle,
                ..
            } => Mat2::rotation(s * left_angle) * *core * Mat2::rotation(s * right_angle),
            Curve::DistortionDescent { from, to } => Mat2::diag(
                from.0.powf(1.0 - s) * to.0.powf(s),
                from.1.powf(1.0 - s) * to.1.powf(s),
            ),
            Curve::ConformalScaling { base, rho } => {
                let r = rho.powf(s);
                Mat2::diag(r * base.0, r * base.1)
            }
            Curve::Diagonal { from, to, .. } => Mat2::diag(
                from.0 + s * (to.0 - from.0),
                from.1 + s * (to.1 - from.1),
            ),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Curve::Rotation { label, .. } | Curve::Diagonal { label, .. } => label,
            Curve::DistortionDescent { .. } => "X2",
            Curve::ConformalScaling { .. } => "X3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub curve: Curve,
    /// Traversed from `s = 1` to `s = 0`.
    pub reversed: bool,
}

impl Segment {
    pub fn eval(&self, s: f64) -> Mat2 {
        self.curve.eval(if self.reversed { 1.0 - s } else { s })
    }
}

/// Piecewise curve in GL⁺(2) certifying that two points of `S_c` lie in the
/// same path component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublevelPath {
    pub level: f64,
    pub segments: Vec<Segment>,
    /// The endpoints were exchanged to satisfy the ordering assumption, and
    /// the path reversed afterwards.
    pub swapped: bool,
    pub notes: Vec<String>,
}

pub const SAMPLES_PER_SEGMENT: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathValidation {
    pub samples: usize,
    pub max_energy: f64,
    pub max_excess: f64,
    pub max_endpoint_gap: f64,
    /// Relative change of `det` along distortion-descent segments.
    pub det_drift: f64,
    /// Relative change of `K` along conformal-scaling segments.
    pub distortion_drift: f64,
    /// Change of `W` along rotation segments.
    pub rotation_energy_drift: f64,
    pub valid: bool,
}

impl SublevelPath {
    fn reversed(mut self) -> Self {
        self.segments.reverse();
        for s in &mut self.segments {
            s.reversed = !s.reversed;
        }
        self
    }

    pub fn start(&self) -> Mat2 {
        self.segments[0].eval(0.0)
    }

    pub fn end(&self) -> Mat2 {
        self.segments[self.segments.len() - 1].eval(1.0)
    }

    /// `n + 1` equally spaced parameter values per segment.
    pub fn sample(&self, n: usize) -> Vec<(usize, f64, Mat2)> {
        let mut out = Vec::with_capacity(self.segments.len() * (n + 1));
        for (k, seg) in self.segments.iter().enumerate() {
            for i in 0..=n {
                let s = i as f64 / n as f64;
                out.push((k, s, seg.eval(s)));
            }
        }
        out
    }

    /// Largest gap between consecutive segment endpoints.
    pub fn endpoint_gap(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| w[0].eval(1.0).max_abs_diff(&w[1].eval(0.0)))
            .fold(0.0, f64::max)
    }

    /// Samples the energy along the path; valid when every sample is at
    /// most `c + 1e-9` and consecutive segments meet within `1e-10`.
    pub fn validate(&self, e: &OrderedSVEnergy, n: usize) -> PathValidation {
        let mut max_energy = f64::NEG_INFINITY;
        let mut samples = 0;
        let mut all_in_domain = true;
        let (mut det_drift, mut distortion_drift, mut rotation_energy_drift) = (0.0f64, 0.0f64, 0.0f64);
        let mut reference = f64::NAN;
        for (k, s, m) in self.sample(n) {
            samples += 1;
            let w = match e.eval_matrix(&m) {
                Ok(v) => v,
                Err(_) => {
                    all_in_domain = false;
                    continue;
                }
            };
            max_energy = max_energy.max(w);
            let q = match self.segments[k].curve {
                Curve::DistortionDescent { .. } => m.det(),
                Curve::ConformalScaling { .. } => linear_distortion(&m).unwrap_or(f64::NAN),
                _ => w,
            };
            if s == 0.0 {
                reference = q;
                continue;
            }
            match self.segments[k].curve {
                Curve::DistortionDescent { .. } => {
                    det_drift = det_drift.max((q - reference).abs() / reference.abs())
                }
                Curve::ConformalScaling { .. } => {
                    distortion_drift = distortion_drift.max((q - reference).abs() / reference.abs())
                }
                Curve::Rotation { .. } => {
                    rotation_energy_drift = rotation_energy_drift.max((q - reference).abs())
                }
                Curve::Diagonal { .. } => {}
            }
        }
        let gap = self.endpoint_gap();
        let excess = max_energy - self.level;
        PathValidation {
            samples,
            max_energy,
            max_excess: excess,
            max_endpoint_gap: gap,
            det_drift,
            distortion_drift,
            rotation_energy_drift,
            valid: all_in_domain && excess <= 1e-9 && gap <= 1e-10,
        }
    }
}

/// Level check with rounding slack.
fn in_sublevel(w: f64, c: f64) -> bool {
    w <= c + 1e-12 * c.abs().max(1.0)
}

/// Rotation segment from `m` to its diagonal form `diag(λ̂₁, λ̂₂)`.
fn to_diagonal(label: &str, m: &Mat2) -> (Segment, (f64, f64)) {
    let sv = svd_ordered(m);
    (
        Segment {
            curve: Curve::Rotation {
                label: label.into(),
                left_angle: sv.q1_angle,
                core: *m,
                right_angle: sv.q2_angle,
            },
            reversed: false,
        },
        (sv.lambda1, sv.lambda2),
    )
}

/// Rotation segment from `diag(λ̂)` to `m`.
fn from_diagonal(label: &str, m: &Mat2) -> Segment {
    let sv = svd_ordered(m);
    Segment {
        curve: Curve::Rotation {
            label: label.into(),
            left_angle: -sv.q1_angle,
            core: Mat2::diag(sv.lambda1, sv.lambda2),
            right_angle: -sv.q2_angle,
        },
        reversed: false,
    }
}

fn check_endpoint(m: &Mat2, w: f64, c: f64, which: &str) -> Result<()> {
    if !(m.det() > 0.0) {
        return Err(Error::Precondition(format!("{which} is not in GL+(2)")));
    }
    if !in_sublevel(w, c) {
        return Err(Error::Precondition(format!(
            "{which} has energy {w} above the level {c}"
        )));
    }
    Ok(())
}

/// Numeric verification of the path hypotheses: `ĥ` nondecreasing on
/// `[1, 10⁸]` and `f` q-convex on `[10⁻⁸, 10⁸]`.
pub fn verify_path_hypotheses(e: &VolIsoSplitEnergy) -> Result<()> {
    let ks = logspace(1.0, 1e8, 4001);
    for w in ks.windows(2) {
        let (a, b) = (e.hhat(w[0]), e.hhat(w[1]));
        if b < a - 1e-12 * a.abs().max(1.0) {
            return Err(Error::Precondition(format!(
                "h is not nondecreasing: h({}) = {a} > h({}) = {b}",
                w[0], w[1]
            )));
        }
    }
    let ts = logspace(1e-8, 1e8, 4001);
    let q = q_convexity_1d(&|t| e.f(t), &ts);
    if let Some(w) = q.witness {
        return Err(Error::Precondition(format!(
            "f is not q-convex: f({}) exceeds max(f({}), f({}))",
            w.t, w.a, w.b
        )));
    }
    Ok(())
}

/// Connects `F` and `F̃` inside `S_c` for `W = ĥ(K) + f(det)` with `ĥ`
/// nondecreasing and `f` q-convex: rotate `F` to diagonal form, lower the
/// distortion at fixed determinant, scale conformally to the target
/// determinant, and rotate out to `F̃`. Requires `K(F̃) ≤ K(F)`; otherwise the
/// endpoints are swapped and the path reversed.
pub fn connect_path(e: &VolIsoSplitEnergy, f: &Mat2, ft: &Mat2, c: f64) -> Result<SublevelPath> {
    verify_path_hypotheses(e)?;
    let g = e.to_ordered();
    check_endpoint(f, g.eval_matrix(f).unwrap_or(f64::NAN), c, "start point")?;
    check_endpoint(ft, g.eval_matrix(ft).unwrap_or(f64::NAN), c, "end point")?;
    let swapped = linear_distortion(ft)? > linear_distortion(f)?;
    let (a, b) = if swapped { (ft, f) } else { (f, ft) };

    let (x1, lam) = to_diagonal("X1", a);
    let sv_t = svd_ordered(b);
    let lam_t = (sv_t.lambda1, sv_t.lambda2);
    let scale = (lam.0 * lam.1).sqrt() / (lam_t.0 * lam_t.1).sqrt();
    let mu = (scale * lam_t.0, scale * lam_t.1);
    let rho = 1.0 / scale;
    let x2 = Segment {
        curve: Curve::DistortionDescent { from: lam, to: mu },
        reversed: false,
    };
    let x3 = Segment {
        curve: Curve::ConformalScaling { base: mu, rho },
        reversed: false,
    };
    let x4 = from_diagonal("X4", b);
    let mut notes = Vec::new();
    if swapped {
        notes.push("K(end) > K(start): endpoints exchanged and path reversed".into());
    }
    let path = SublevelPath {
        level: c,
        segments: vec![x1, x2, x3, x4],
        swapped,
        notes,
    };
    Ok(if swapped { path.reversed() } else { path })
}

/// Connects `F` and `F̃` inside `S_c` for the Aubert energy through
/// diagonal matrices: `diag(λ₁, s)` up to the diagonal, `diag(s, s)` out to
/// `λ̃₁`, then `diag(λ̃₁, λ̃₁ − s)` down to `F̃`, with rotations at both ends.
/// Requires `λ̃₁ ≥ λ₁`; otherwise the endpoints are swapped.
pub fn aubert_connect_path(e: &OrderedSVEnergy, f: &Mat2, ft: &Mat2, c: f64) -> Result<SublevelPath> {
    check_endpoint(f, e.eval_matrix(f).unwrap_or(f64::NAN), c, "start point")?;
    check_endpoint(ft, e.eval_matrix(ft).unwrap_or(f64::NAN), c, "end point")?;
    let swapped = svd_ordered(ft).lambda1 < svd_ordered(f).lambda1;
    let (a, b) = if swapped { (ft, f) } else { (f, ft) };
    let (r1, lam) = to_diagonal("R1", a);
    let sv_t = svd_ordered(b);
    let lam_t = (sv_t.lambda1, sv_t.lambda2);
    let segments = vec![
        r1,
        Segment {
            curve: Curve::Diagonal {
                label: "X1".into(),
                from: lam,
                to: (lam.0, lam.0),
            },
            reversed: false,
        },
        Segment {
            curve: Curve::Diagonal {
                label: "X2".into(),
                from: (lam.0, lam.0),
                to: (lam_t.0, lam_t.0),
            },
            reversed: false,
        },
        Segment {
            curve: Curve::Diagonal {
                label: "X3".into(),
                from: (lam_t.0, lam_t.0),
                to: lam_t,
            },
            reversed: false,
        },
        from_diagonal("R2", b),
    ];
    let mut notes = Vec::new();
    if swapped {
        notes.push("lambda1(end) < lambda1(start): endpoints exchanged and path reversed".into());
    }
    let path = SublevelPath {
        level: c,
        segments,
        swapped,
        notes,
    };
    Ok(if swapped { path.reversed() } else { path })
}

/// Range of `dW/ds` sampled along one segment, in the segment's traversal
/// direction, from central differences of `W` in the segment parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSlope {
    pub label: String,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

pub fn segment_slopes(path: &SublevelPath, e: &OrderedSVEnergy, n: usize) -> Vec<SegmentSlope> {
    let h = 1e-6;
    path.segments
        .iter()
        .map(|seg| {
            let w = |s: f64| e.eval_matrix(&seg.eval(s)).unwrap_or(f64::NAN);
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for i in 0..n {
                let s = (i as f64 + 0.5) / n as f64;
                let d = (w(s + h) - w(s - h)) / (2.0 * h);
                min = min.min(d);
                max = max.max(d);
            }
            SegmentSlope {
                label: seg.curve.label().to_string(),
                min,
                max,
                samples: n,
            }
        })
        .collect()
}

/// Seeded pairs `R₁ diag(λ) R₂` with `ln λᵢ` uniform in `[−r, r]` and
/// uniform rotation angles.
pub fn random_gl_pairs(seed: u64, n: usize, log_range: f64) -> Vec<(Mat2, Mat2)> {
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let one = |rng: &mut rand_chacha::ChaCha8Rng| {
        let a: f64 = rng.gen_range(-log_range..=log_range);
        let b: f64 = rng.gen_range(-log_range..=log_range);
        Mat2::rotation(rng.gen_range(-PI..PI))
            * Mat2::diag(a.max(b).exp(), a.min(b).exp())
            * Mat2::rotation(rng.gen_range(-PI..PI))
    };
    (0..n).map(|_| (one(&mut rng), one(&mut rng))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QWitness {
    pub a: f64,
    pub t: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QConvexityReport {
    pub verdict: Verdict,
    pub samples: usize,
    pub witness: Option<QWitness>,
}

/// Checks `g(t) ≤ max(g(a), g(b))` for all sampled `a ≤ t ≤ b` in O(n) with
/// prefix and suffix minima.
pub fn q_convexity_1d(g: &dyn Fn(f64) -> f64, samples: &[f64]) -> QConvexityReport {
    let mut ts = samples.to_vec();
    ts.sort_by(f64::total_cmp);
    let vals: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let n = ts.len();
    let mut pre = vec![0usize; n];
    let mut suf = vec![0usize; n];
    for i in 0..n {
        pre[i] = if i > 0 && vals[pre[i - 1]] <= vals[i] { pre[i - 1] } else { i };
    }
    for i in (0..n).rev() {
        suf[i] = if i + 1 < n && vals[suf[i + 1]] <= vals[i] { suf[i + 1] } else { i };
    }
    let mut witness = None;
    for i in 0..n {
        let bound = vals[pre[i]].max(vals[suf[i]]);
        if vals[i] > bound + 1e-12 * vals[i].abs().max(1.0) {
            witness = Some(QWitness {
                a: ts[pre[i]],
                t: ts[i],
                b: ts[suf[i]],
            });
            break;
        }
    }
    QConvexityReport {
        verdict: if witness.is_some() { Verdict::Fail } else { Verdict::Pass },
        samples: n,
        witness,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub energy: String,
    pub level: f64,
    pub grid: DomainGrid,
    pub components: usize,
    pub nodes_in_sublevel: usize,
    /// Component label per node, row-major in the λ₁ index; `-1` outside the
    /// sublevel set or the ordered triangle.
    pub labels: Vec<i32>,
}

/// Connected components of `{W(diag(λ₁, λ₂)) ≤ c}` on the ordered nodes of
/// the grid, with 4-neighbour adjacency in log coordinates.
pub fn grid_connectivity(e: &OrderedSVEnergy, c: f64, grid: &DomainGrid) -> ConnectivityReport {
    let (nu, nv) = (grid.n_u, grid.n_v);
    let us = grid.u_values();
    let vs = grid.v_values();
    let mut inside = vec![false; nu * nv];
    for i in 0..nu {
        for j in 0..nv {
            if us[i] >= vs[j] {
                inside[i * nv + j] = e.value(us[i].exp(), vs[j].exp()) <= c;
            }
        }
    }
    let mut labels = vec![-1i32; nu * nv];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..nu * nv {
        if !inside[start] || labels[start] >= 0 {
            continue;
        }
        let label = components as i32;
        components += 1;
        labels[start] = label;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k / nv, k % nv);
            let mut push = |ni: usize, nj: usize| {
                let nk = ni * nv + nj;
                if inside[nk] && labels[nk] < 0 {
                    labels[nk] = label;
                    queue.push_back(nk);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < nu {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < nv {
                push(i, j + 1);
            }
        }
    }
    ConnectivityReport {
        energy: e.name().to_string(),
        level: c,
        grid: *grid,
        components,
        nodes_in_sublevel: inside.iter().filter(|&&b| b).count(),
        labels,
    }
}
