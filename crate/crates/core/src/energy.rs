//! Isotropic energy representations.
//!
//! An [`OrderedSVEnergy`] is a function `ĝ(λ̂₁, λ̂₂)` of the ordered singular
//! values. A [`VolIsoSplitEnergy`] is `ĥ(K) + f(det)` with the linear distortion
//! `K = λ̂₁/λ̂₂`; it converts to the ordered form with [`VolIsoSplitEnergy::to_ordered`].
//! Derivatives are analytic when the constructor supplies them and central
//! differences otherwise.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planar::{linear_distortion, svd_ordered, Mat2};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type PartialsFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&Mat2) -> f64 + Send + Sync>;

/// Base relative step for first-order central differences.
pub const FIRST_STEP: f64 = 1e-5;
/// Base relative step for second-order central differences.
pub const SECOND_STEP: f64 = 1e-4;
/// Points closer than this to a declared seam count as on the seam.
pub const SEAM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C1,
    C2,
}

/// Locus in the ordered singular value domain where an energy is not smooth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Seam {
    /// `λ̂₁ = value`
    Lambda1(f64),
    /// `λ̂₁ / λ̂₂ = value`
    Ratio(f64),
    /// `λ̂₁ λ̂₂ = value`
    Product(f64),
}

impl Seam {
    pub fn distance(&self, l1: f64, l2: f64) -> f64 {
        match *self {
            Seam::Lambda1(s) => (l1 - s).abs(),
            Seam::Ratio(s) => (l1 / l2 - s).abs(),
            Seam::Product(s) => (l1 * l2 - s).abs(),
        }
    }
}

impl fmt::Display for Seam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seam::Lambda1(s) => write!(f, "lambda1 = {s}"),
            Seam::Ratio(s) => write!(f, "lambda1/lambda2 = {s}"),
            Seam::Product(s) => write!(f, "lambda1*lambda2 = {s}"),
        }
    }
}

/// Closed-form growth behaviour registered with an energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GrowthFlags {
    /// `W(F) → ∞` as `det F → 0`.
    pub boundary_blowup: bool,
    /// `W(F) → ∞` as `|F| → ∞` within GL⁺(2).
    pub coercive: bool,
}

/// Central difference step `base · max(1, |t|)`, shrunk to `base · t` when the
/// stencil would otherwise leave `(0, ∞)`.
pub fn scaled_step(base: f64, t: f64) -> f64 {
    let step = base * t.abs().max(1.0);
    if t > 0.0 && step >= 0.5 * t {
        base * t
    } else {
        step
    }
}

pub fn central_first(g: &dyn Fn(f64) -> f64, t: f64, step: f64) -> f64 {
    (g(t + step) - g(t - step)) / (2.0 * step)
}

/// Central second difference `(g(t+δ) − 2g(t) + g(t−δ)) / δ²`, requiring the
/// stencil to lie strictly inside the open interval `domain`.
pub fn second_derivative_1d(
    g: &dyn Fn(f64) -> f64,
    t: f64,
    step: f64,
    domain: (f64, f64),
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    if !(t - step > domain.0 && t + step < domain.1) {
        return Err(Error::Domain(format!(
            "stencil [{}, {}] leaves domain ({}, {})",
            t - step,
            t + step,
            domain.0,
            domain.1
        )));
    }
    Ok((g(t + step) - 2.0 * g(t) + g(t - step)) / (step * step))
}

/// An energy in ordered-singular-value form `ĝ(λ̂₁, λ̂₂)` on `λ̂₁ ≥ λ̂₂ > 0`.
#[derive(Clone)]
pub struct OrderedSVEnergy {
    name: String,
    value: PairFn,
    partials: Option<PartialsFn>,
    smoothness: Smoothness,
    seams: Vec<Seam>,
    extension: Option<MatrixFn>,
    growth: Option<GrowthFlags>,
}

impl fmt::Debug for OrderedSVEnergy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrderedSVEnergy")
            .field("name", &self.name)
            .field("analytic_partials", &self.partials.is_some())
            .field("smoothness", &self.smoothness)
            .field("seams", &self.seams)
            .field("extension", &self.extension.is_some())
            .finish()
    }
}

impl OrderedSVEnergy {
    /// A C² energy without analytic partials.
    pub fn new(name: impl Into<String>, value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        OrderedSVEnergy {
            name: name.into(),
            value: Arc::new(value),
            partials: None,
            smoothness: Smoothness::C2,
            seams: Vec::new(),
            extension: None,
            growth: None,
        }
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn with_seam(mut self, seam: Seam) -> Self {
        self.seams.push(seam);
        self
    }

    /// Closed-form matrix formula valid on all of ℝ^{2×2}.
    pub fn with_extension(mut self, ext: impl Fn(&Mat2) -> f64 + Send + Sync + 'static) -> Self {
        self.extension = Some(Arc::new(ext));
        self
    }

    pub fn with_growth(mut self, growth: GrowthFlags) -> Self {
        self.growth = Some(growth);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn seams(&self) -> &[Seam] {
        &self.seams
    }

    pub fn growth(&self) -> Option<GrowthFlags> {
        self.growth
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub fn has_extension(&self) -> bool {
        self.extension.is_some()
    }

    /// `ĝ(λ̂₁, λ̂₂)` with no domain check.
    pub fn value(&self, l1: f64, l2: f64) -> f64 {
        (self.value)(l1, l2)
    }

    /// `W(F) = ĝ(λ̂(F))` on GL⁺(2).
    pub fn eval_matrix(&self, f: &Mat2) -> Result<f64> {
        let det = f.det();
        if !(det > 0.0) {
            return Err(Error::Domain(format!(
                "`{}` is defined on GL+(2) only, got det F = {det:e}",
                self.name
            )));
        }
        let sv = svd_ordered(f);
        Ok(self.value(sv.lambda1, sv.lambda2))
    }

    /// Evaluates the ℝ^{2×2} extension when one is registered, and the
    /// GL⁺(2) form otherwise.
    pub fn eval_extended(&self, f: &Mat2) -> Result<f64> {
        match &self.extension {
            Some(ext) => Ok(ext(f)),
            None => self.eval_matrix(f),
        }
    }

    pub fn seam_at(&self, l1: f64, l2: f64) -> Option<Seam> {
        self.seams
            .iter()
            .copied()
            .find(|s| s.distance(l1, l2) <= SEAM_TOL)
    }

    /// Smallest distance from `(l1, l2)` to any declared seam.
    pub fn seam_distance(&self, l1: f64, l2: f64) -> f64 {
        self.seams
            .iter()
            .map(|s| s.distance(l1, l2))
            .fold(f64::INFINITY, f64::min)
    }

    /// `(∂ĝ/∂λ̂₁, ∂ĝ/∂λ̂₂)`: analytic if supplied, central differences otherwise.
    /// Points on a seam yield [`Error::Seam`] carrying one-sided values.
    pub fn partials(&self, l1: f64, l2: f64) -> Result<(f64, f64)> {
        if !(l2 > 0.0 && l1 >= l2) || !l1.is_finite() {
            return Err(Error::Domain(format!(
                "({l1}, {l2}) is outside the ordered domain l1 >= l2 > 0"
            )));
        }
        if let Some(seam) = self.seam_at(l1, l2) {
            return Err(Error::Seam {
                point: (l1, l2),
                seam: seam.to_string(),
                below: self.one_sided_partials(l1, l2, -1.0),
                above: self.one_sided_partials(l1, l2, 1.0),
            });
        }
        Ok(match &self.partials {
            Some(p) => p(l1, l2),
            None => self.numeric_partials(l1, l2),
        })
    }

    pub fn numeric_partials(&self, l1: f64, l2: f64) -> (f64, f64) {
        self.central_partials(l1, l2, 1.0)
    }

    fn central_partials(&self, l1: f64, l2: f64, shrink: f64) -> (f64, f64) {
        let h1 = shrink * scaled_step(FIRST_STEP, l1);
        let h2 = shrink * scaled_step(FIRST_STEP, l2);
        let d1 = (self.value(l1 + h1, l2) - self.value(l1 - h1, l2)) / (2.0 * h1);
        let d2 = (self.value(l1, l2 + h2) - self.value(l1, l2 - h2)) / (2.0 * h2);
        (d1, d2)
    }

    /// Second-order one-sided differences; `side` is `-1` (below) or `+1` (above).
    pub fn one_sided_partials(&self, l1: f64, l2: f64, side: f64) -> (f64, f64) {
        let h1 = side * scaled_step(FIRST_STEP, l1);
        let h2 = side * scaled_step(FIRST_STEP, l2);
        let g0 = self.value(l1, l2);
        let d1 = (-3.0 * g0 + 4.0 * self.value(l1 + h1, l2) - self.value(l1 + 2.0 * h1, l2))
            / (2.0 * h1);
        let d2 = (-3.0 * g0 + 4.0 * self.value(l1, l2 + h2) - self.value(l1, l2 + 2.0 * h2))
            / (2.0 * h2);
        (d1, d2)
    }

    /// Checks finiteness on every ordered grid point and, when analytic
    /// partials are registered, their agreement with central differences
    /// away from seams: within `1e-6` relative plus twice the truncation
    /// error estimated from a half-step difference.
    pub fn validate(&self, grid: &DomainGrid) -> Result<ValidationSummary> {
        let mut summary = ValidationSummary::default();
        for p in grid.ordered_points() {
            let v = self.value(p.lambda1, p.lambda2);
            if !v.is_finite() {
                return Err(Error::Precondition(format!(
                    "`{}` is not finite at ({}, {})",
                    self.name, p.lambda1, p.lambda2
                )));
            }
            summary.points += 1;
            let Some(analytic) = &self.partials else {
                continue;
            };
            let margin = 10.0 * scaled_step(FIRST_STEP, p.lambda1.max(1.0));
            if self.seam_distance(p.lambda1, p.lambda2) <= margin {
                summary.seam_skipped += 1;
                continue;
            }
            let (a1, a2) = analytic(p.lambda1, p.lambda2);
            let (n1, n2) = self.numeric_partials(p.lambda1, p.lambda2);
            let (m1, m2) = self.central_partials(p.lambda1, p.lambda2, 0.5);
            for (a, n, m) in [(a1, n1, m1), (a2, n2, m2)] {
                let truncation = (n - m).abs() * 4.0 / 3.0;
                let rel = (a - m).abs() / a.abs().max(1.0);
                summary.max_rel_error = summary.max_rel_error.max(rel);
                if (a - m).abs() > 1e-6 * a.abs().max(1.0) + 2.0 * truncation {
                    return Err(Error::Precondition(format!(
                        "`{}`: analytic partial {a} disagrees with finite difference {m} at ({}, {})",
                        self.name, p.lambda1, p.lambda2
                    )));
                }
            }
            summary.derivative_checked += 1;
        }
        Ok(summary)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub points: usize,
    pub derivative_checked: usize,
    pub seam_skipped: usize,
    pub max_rel_error: f64,
}

/// A scalar component `ĥ` or `f` of a split energy.
#[derive(Clone)]
pub struct ScalarPart {
    value: ScalarFn,
    first: Option<ScalarFn>,
    second: Option<ScalarFn>,
    smoothness: Smoothness,
    seams: Vec<f64>,
}

impl fmt::Debug for ScalarPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarPart")
            .field("analytic_first", &self.first.is_some())
            .field("analytic_second", &self.second.is_some())
            .field("smoothness", &self.smoothness)
            .field("seams", &self.seams)
            .finish()
    }
}

impl ScalarPart {
    pub fn new(value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarPart {
            value: Arc::new(value),
            first: None,
            second: None,
            smoothness: Smoothness::C2,
            seams: Vec::new(),
        }
    }

    pub fn with_derivatives(
        mut self,
        first: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.first = Some(Arc::new(first));
        self.second = Some(Arc::new(second));
        self
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn with_seam(mut self, t: f64) -> Self {
        self.seams.push(t);
        self
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn seams(&self) -> &[f64] {
        &self.seams
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.first.is_some() && self.second.is_some()
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn first(&self, t: f64) -> f64 {
        match &self.first {
            Some(d) => d(t),
            None => central_first(&|x| self.value(x), t, scaled_step(FIRST_STEP, t)),
        }
    }

    pub fn second(&self, t: f64) -> f64 {
        match &self.second {
            Some(d) => d(t),
            None => {
                let step = scaled_step(SECOND_STEP, t);
                let g = |x| self.value(x);
                (g(t + step) - 2.0 * g(t) + g(t - step)) / (step * step)
            }
        }
    }

    pub fn near_seam(&self, t: f64, tol: f64) -> bool {
        self.seams.iter().any(|s| (s - t).abs() <= tol)
    }
}

/// Closed-form growth limits of the split components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitGrowthClaims {
    pub iso_at_infinity: bool,
    pub vol_at_infinity: bool,
    pub vol_at_zero: bool,
}

/// `W(F) = ĥ(K(F)) + f(det F)` with `ĥ: [1, ∞) → ℝ`, `f: (0, ∞) → ℝ`.
#[derive(Debug, Clone)]
pub struct VolIsoSplitEnergy {
    name: String,
    iso: ScalarPart,
    vol: ScalarPart,
    h0: Option<f64>,
    f0: Option<f64>,
    growth: Option<SplitGrowthClaims>,
}

impl VolIsoSplitEnergy {
    pub fn new(name: impl Into<String>, iso: ScalarPart, vol: ScalarPart) -> Self {
        VolIsoSplitEnergy {
            name: name.into(),
            iso,
            vol,
            h0: None,
            f0: None,
            growth: None,
        }
    }

    /// Registers closed-form values of `inf t²h″(t)` and `inf t²f″(t)`.
    pub fn with_closed_form_infima(mut self, h0: f64, f0: f64) -> Self {
        self.h0 = Some(h0);
        self.f0 = Some(f0);
        self
    }

    pub fn with_growth_claims(mut self, claims: SplitGrowthClaims) -> Self {
        self.growth = Some(claims);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn iso(&self) -> &ScalarPart {
        &self.iso
    }

    pub fn vol(&self) -> &ScalarPart {
        &self.vol
    }

    pub fn closed_form_h0(&self) -> Option<f64> {
        self.h0
    }

    pub fn closed_form_f0(&self) -> Option<f64> {
        self.f0
    }

    pub fn growth_claims(&self) -> Option<SplitGrowthClaims> {
        self.growth
    }

    pub fn hhat(&self, t: f64) -> f64 {
        self.iso.value(t)
    }

    pub fn f(&self, t: f64) -> f64 {
        self.vol.value(t)
    }

    /// `h(t) = ĥ(t)` for `t ≥ 1` and `ĥ(1/t)` for `t < 1`.
    pub fn unordered_h(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("h(t) needs t > 0, got {t}")));
        }
        Ok(self.h(t))
    }

    fn h(&self, t: f64) -> f64 {
        if t >= 1.0 {
            self.iso.value(t)
        } else {
            self.iso.value(1.0 / t)
        }
    }

    /// `h′(t)`, using `d/dt ĥ(1/t) = −ĥ′(1/t)/t²` below 1.
    pub fn h_prime(&self, t: f64) -> f64 {
        if t >= 1.0 {
            self.iso.first(t)
        } else {
            -self.iso.first(1.0 / t) / (t * t)
        }
    }

    /// `h″(t)`, using `ĥ″(1/t)/t⁴ + 2ĥ′(1/t)/t³` below 1.
    pub fn h_second(&self, t: f64) -> f64 {
        if t >= 1.0 {
            self.iso.second(t)
        } else {
            let s = 1.0 / t;
            self.iso.second(s) / t.powi(4) + 2.0 * self.iso.first(s) / t.powi(3)
        }
    }

    pub fn f_prime(&self, t: f64) -> f64 {
        self.vol.first(t)
    }

    pub fn f_second(&self, t: f64) -> f64 {
        self.vol.second(t)
    }

    /// Smoothness of the unordered extension `h` together with `f`.
    pub fn smoothness(&self) -> Smoothness {
        self.iso.smoothness().min(self.vol.smoothness())
    }

    /// `ĥ(K(F)) + f(det F)`.
    pub fn eval_matrix(&self, m: &Mat2) -> Result<f64> {
        let k = linear_distortion(m)?;
        Ok(self.iso.value(k) + self.vol.value(m.det()))
    }

    /// `ĝ(λ̂₁, λ̂₂) = ĥ(λ̂₁/λ̂₂) + f(λ̂₁λ̂₂)`, with chain-rule partials when both
    /// components carry analytic derivatives.
    pub fn to_ordered(&self) -> OrderedSVEnergy {
        let this = self.clone();
        let mut energy =
            OrderedSVEnergy::new(self.name.clone(), move |a, b| this.h(a / b) + this.f(a * b))
                .with_smoothness(self.smoothness());
        if self.iso.first.is_some() && self.vol.first.is_some() {
            let this = self.clone();
            energy = energy.with_partials(move |a, b| {
                let hp = this.h_prime(a / b);
                let fp = this.f_prime(a * b);
                (hp / b + fp * b, -hp * a / (b * b) + fp * a)
            });
        }
        for &s in self.iso.seams() {
            energy = energy.with_seam(Seam::Ratio(s));
        }
        for &s in self.vol.seams() {
            energy = energy.with_seam(Seam::Product(s));
        }
        if let Some(g) = self.growth {
            energy = energy.with_growth(GrowthFlags {
                boundary_blowup: g.vol_at_zero && g.iso_at_infinity,
                coercive: g.vol_at_infinity && g.iso_at_infinity,
            });
        }
        energy
    }
}

/// Evenly spaced values `min + i (max − min)/(n − 1)`; nodes that are exact
/// multiples of the spacing come out exact.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..n)
            .map(|i| min + (i as f64 * (max - min)) / (n - 1) as f64)
            .collect(),
    }
}

/// `n` log-spaced samples from `lo` to `hi` (both positive).
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Rectangular grid in log coordinates `u = ln λ₁`, `v = ln λ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub n_u: usize,
    pub n_v: usize,
}

impl Default for DomainGrid {
    fn default() -> Self {
        DomainGrid::square(-3.0, 3.0, 121)
    }
}

/// A grid node with its indices and singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub i: usize,
    pub j: usize,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl DomainGrid {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64, n_u: usize, n_v: usize) -> Result<Self> {
        let finite = [u_min, u_max, v_min, v_max].iter().all(|x| x.is_finite());
        if !finite || !(u_min < u_max) || !(v_min < v_max) || n_u < 2 || n_v < 2 {
            return Err(Error::Domain(format!(
                "invalid grid u [{u_min}, {u_max}] x v [{v_min}, {v_max}] with {n_u} x {n_v} nodes"
            )));
        }
        Ok(DomainGrid {
            u_min,
            u_max,
            v_min,
            v_max,
            n_u,
            n_v,
        })
    }

    /// Same bounds and node count on both axes.
    pub fn square(min: f64, max: f64, n: usize) -> Self {
        DomainGrid {
            u_min: min,
            u_max: max,
            v_min: min,
            v_max: max,
            n_u: n,
            n_v: n,
        }
    }

    /// Grid with `2n − 1` nodes per axis over the same bounds, so every
    /// original node is kept.
    pub fn refined(&self) -> Self {
        DomainGrid {
            n_u: 2 * self.n_u - 1,
            n_v: 2 * self.n_v - 1,
            ..*self
        }
    }

    pub fn u_values(&self) -> Vec<f64> {
        linspace(self.u_min, self.u_max, self.n_u)
    }

    pub fn v_values(&self) -> Vec<f64> {
        linspace(self.v_min, self.v_max, self.n_v)
    }

    /// Every node, row-major in `i` (the λ₁ axis), unordered.
    pub fn all_points(&self) -> Vec<GridPoint> {
        let us = self.u_values();
        let vs = self.v_values();
        let mut out = Vec::with_capacity(self.n_u * self.n_v);
        for (i, u) in us.iter().enumerate() {
            for (j, v) in vs.iter().enumerate() {
                out.push(GridPoint {
                    i,
                    j,
                    lambda1: u.exp(),
                    lambda2: v.exp(),
                });
            }
        }
        out
    }

    /// Nodes with `λ₁ ≥ λ₂`.
    pub fn ordered_points(&self) -> Vec<GridPoint> {
        let us = self.u_values();
        let vs = self.v_values();
        let mut out = Vec::new();
        for (i, u) in us.iter().enumerate() {
            for (j, v) in vs.iter().enumerate() {
                if u >= v {
                    out.push(GridPoint {
                        i,
                        j,
                        lambda1: u.exp(),
                        lambda2: v.exp(),
                    });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w0_like() -> VolIsoSplitEnergy {
        VolIsoSplitEnergy::new(
            "w0-test",
            ScalarPart::new(|t| t - t.ln()).with_derivatives(|t| 1.0 - 1.0 / t, |t| 1.0 / (t * t)),
            ScalarPart::new(|t| t.ln() + 1.0 / t)
                .with_derivatives(|t| 1.0 / t - 1.0 / (t * t), |t| -1.0 / (t * t) + 2.0 / t.powi(3)),
        )
    }

    #[test]
    fn second_difference_exact_for_quadratics() {
        let g = |t: f64| t * t;
        for t in [-3.0, 0.5, 7.0] {
            let d = second_derivative_1d(&g, t, 1e-3, (f64::NEG_INFINITY, f64::INFINITY)).unwrap();
            assert!((d - 2.0).abs() < 1e-6);
        }
        let lin = |t: f64| t;
        let d = second_derivative_1d(&lin, 2.0, 1e-4, (0.0, f64::INFINITY)).unwrap();
        assert!(d.abs() < 1e-6);
    }

    #[test]
    fn second_difference_matches_analytic_f() {
        let f = |t: f64| t.ln() + 1.0 / t;
        let d = second_derivative_1d(&f, 1.0, scaled_step(SECOND_STEP, 1.0), (0.0, f64::INFINITY))
            .unwrap();
        let analytic = -1.0 + 2.0;
        assert!((d - analytic).abs() < 1e-6);
    }

    #[test]
    fn second_difference_rejects_leaving_domain() {
        let f = |t: f64| t.ln();
        assert!(second_derivative_1d(&f, 1e-3, 1e-2, (0.0, f64::INFINITY)).is_err());
        assert!(second_derivative_1d(&f, 1.0, 0.0, (0.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn unordered_h_reflects() {
        let e = w0_like();
        let expected = 2.0 - 2f64.ln();
        assert!((e.unordered_h(2.0).unwrap() - expected).abs() < 1e-15);
        assert!((e.unordered_h(0.5).unwrap() - expected).abs() < 1e-15);
        assert_eq!(e.unordered_h(1.0).unwrap(), 1.0);
        assert!(e.unordered_h(0.0).is_err());
        assert!(e.unordered_h(-1.0).is_err());
    }

    #[test]
    fn split_value_examples() {
        let e = w0_like().to_ordered();
        let v = e.value(std::f64::consts::E, 1.0);
        assert!((v - (std::f64::consts::E + 1.0 / std::f64::consts::E)).abs() < 1e-14);

        let vol_only = VolIsoSplitEnergy::new("vol", ScalarPart::new(|_| 0.0), ScalarPart::new(|t| t))
            .to_ordered();
        assert!((vol_only.value(3.0, 0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn numeric_partials_of_linear() {
        let e = OrderedSVEnergy::new("sum", |a, b| a + b);
        for (a, b) in [(1.0, 0.5), (10.0, 3.0), (0.01, 0.001)] {
            let (d1, d2) = e.partials(a, b).unwrap();
            assert!((d1 - 1.0).abs() < 1e-9 && (d2 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn partials_outside_domain() {
        let e = OrderedSVEnergy::new("sum", |a, b| a + b);
        assert!(e.partials(1.0, 2.0).is_err());
        assert!(e.partials(1.0, 0.0).is_err());
    }

    #[test]
    fn seam_error_carries_one_sided_values() {
        let e = OrderedSVEnergy::new("kink", |a, b| if a <= 1.0 { a * b } else { a + b - 1.0 })
            .with_smoothness(Smoothness::C0)
            .with_seam(Seam::Lambda1(1.0));
        match e.partials(1.0, 0.5) {
            Err(Error::Seam { below, above, .. }) => {
                assert!((below.0 - 0.5).abs() < 1e-8 && (below.1 - 1.0).abs() < 1e-8);
                assert!((above.0 - 1.0).abs() < 1e-8 && (above.1 - 1.0).abs() < 1e-8);
            }
            other => panic!("expected seam error, got {other:?}"),
        }
        assert!(e.partials(1.5, 0.5).is_ok());
    }

    #[test]
    fn eval_matrix_rejects_nonpositive_det() {
        let e = w0_like().to_ordered();
        assert!(e.eval_matrix(&Mat2::diag(1.0, -1.0)).is_err());
        assert!(e.eval_matrix(&Mat2::ZERO).is_err());
        assert_eq!(e.eval_matrix(&Mat2::IDENTITY).unwrap(), 2.0);
    }

    #[test]
    fn validation_catches_wrong_partials() {
        let bad = OrderedSVEnergy::new("bad", |a, b| a * b).with_partials(|a, _| (a, a));
        assert!(bad.validate(&DomainGrid::square(-1.0, 1.0, 5)).is_err());
        let good = OrderedSVEnergy::new("good", |a, b| a * b).with_partials(|a, b| (b, a));
        let s = good.validate(&DomainGrid::square(-1.0, 1.0, 5)).unwrap();
        assert_eq!(s.points, 15);
        assert_eq!(s.derivative_checked, 15);
    }

    /// Large third derivatives near the axis inflate the central-difference
    /// error; the gate must absorb that but still see a 1e-4 relative slip.
    #[test]
    fn validation_tolerates_truncation_not_errors() {
        let exact = OrderedSVEnergy::new("steep", |a: f64, b: f64| a / b + 2.0 * b.ln())
            .with_partials(|a, b| (1.0 / b, -a / (b * b) + 2.0 / b));
        assert!(exact.validate(&DomainGrid::default()).is_ok());
        let slipped = OrderedSVEnergy::new("steep", |a: f64, b: f64| a / b + 2.0 * b.ln())
            .with_partials(|a, b| (1.0 / b, (-a / (b * b) + 2.0 / b) * (1.0 + 1e-4)));
        assert!(slipped.validate(&DomainGrid::default()).is_err());
    }

    #[test]
    fn grid_nodes_are_exact() {
        let g = DomainGrid::default();
        let us = g.u_values();
        assert_eq!(us.len(), 121);
        assert_eq!(us[0], -3.0);
        assert_eq!(us[60], 0.0);
        assert_eq!(us[120], 3.0);
        assert!(g.ordered_points().iter().all(|p| p.lambda1 >= p.lambda2));
        assert!(DomainGrid::new(0.0, 0.0, 0.0, 1.0, 3, 3).is_err());
        assert!(DomainGrid::new(0.0, 1.0, 0.0, 1.0, 1, 3).is_err());
        let r = g.refined();
        assert_eq!(r.n_u, 241);
        assert_eq!(r.u_values()[120], 0.0);
    }

    proptest! {
        #[test]
        fn h_is_reflection_symmetric(t in 1e-3f64..1e3) {
            let e = w0_like();
            let a = e.unordered_h(t).unwrap();
            let b = e.unordered_h(1.0 / t).unwrap();
            prop_assert!((a - b).abs() <= 1e-14 * a.abs());
            let p = 2f64.powi((t.log2().round()) as i32);
            prop_assert_eq!(e.unordered_h(p).unwrap(), e.unordered_h(1.0 / p).unwrap());
        }

        #[test]
        fn split_agrees_with_distortion_route(u in -2.0f64..2.0, v in -2.0f64..2.0, q1 in -3.0f64..3.0, q2 in -3.0f64..3.0) {
            let split = w0_like();
            let ordered = split.to_ordered();
            let m = Mat2::rotation(q1) * Mat2::diag(u.exp(), v.exp()) * Mat2::rotation(q2);
            let a = ordered.eval_matrix(&m).unwrap();
            let b = split.eval_matrix(&m).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn eval_is_rotation_invariant(u in -2.0f64..2.0, v in -2.0f64..2.0, q1 in -3.0f64..3.0, q2 in -3.0f64..3.0) {
            let e = w0_like().to_ordered();
            let d = Mat2::diag(u.exp(), v.exp());
            let a = e.eval_matrix(&d).unwrap();
            let b = e.eval_matrix(&(Mat2::rotation(q1) * d * Mat2::rotation(q2))).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
