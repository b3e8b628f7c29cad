//! Polyconvexity falsification for energies in ordered singular values.
//!
//! `W` is polyconvex iff for every `γ` with `γ₁ > γ₂` there is a `c` in
//! `[−(∂₁ĝ − ∂₂ĝ)/(γ₁ − γ₂), (∂₁ĝ + ∂₂ĝ)/(γ₁ + γ₂)]` such that
//! `ĝ(ν) ≥ ĝ(γ) + ∂₁ĝ (ν₁ − γ₁) + ∂₂ĝ (ν₂ − γ₂) + c (ν₁ − γ₁)(ν₂ − γ₂)` for all `ν`.
//! Each `ν` turns the inequality into a half-line for `c`, so on a grid the
//! existence of `c` is decided by interval intersection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{DomainGrid, OrderedSVEnergy};
use crate::error::{Error, Result};
use crate::verdict::Verdict;

/// Minimal `γ₁ − γ₂`.
pub const SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CInterval {
    pub gamma: (f64, f64),
    pub c_lo: f64,
    pub c_hi: f64,
}

impl CInterval {
    pub fn is_empty(&self) -> bool {
        self.c_lo > self.c_hi
    }
}

fn check_ordered(p: (f64, f64), what: &str) -> Result<()> {
    if !(p.1 > 0.0 && p.0 >= p.1 && p.0.is_finite()) {
        return Err(Error::Domain(format!(
            "{what} = ({}, {}) is outside l1 >= l2 > 0",
            p.0, p.1
        )));
    }
    Ok(())
}

/// Admissible interval for `c` at `γ`.
pub fn c_interval(e: &OrderedSVEnergy, g1: f64, g2: f64) -> Result<CInterval> {
    check_ordered((g1, g2), "gamma")?;
    if g1 - g2 < SEPARATION {
        return Err(Error::Separation {
            gap: g1 - g2,
            margin: SEPARATION,
        });
    }
    let (d1, d2) = e.partials(g1, g2)?;
    Ok(CInterval {
        gamma: (g1, g2),
        c_lo: -(d1 - d2) / (g1 - g2),
        c_hi: (d1 + d2) / (g1 + g2),
    })
}

/// Tangent data at `γ`.
#[derive(Debug, Clone, Copy)]
struct Tangent {
    gamma: (f64, f64),
    value: f64,
    d1: f64,
    d2: f64,
}

impl Tangent {
    fn at(e: &OrderedSVEnergy, gamma: (f64, f64)) -> Result<Self> {
        check_ordered(gamma, "gamma")?;
        let (d1, d2) = e.partials(gamma.0, gamma.1)?;
        Ok(Tangent {
            gamma,
            value: e.value(gamma.0, gamma.1),
            d1,
            d2,
        })
    }

    /// `(ĝ(ν) − tangent(ν), cross term, magnitude of the summed terms)`.
    fn remainder(&self, e: &OrderedSVEnergy, nu: (f64, f64)) -> (f64, f64, f64) {
        let (a, b) = (nu.0 - self.gamma.0, nu.1 - self.gamma.1);
        let gv = e.value(nu.0, nu.1);
        let (t1, t2) = (self.d1 * a, self.d2 * b);
        let rest = gv - self.value - t1 - t2;
        let scale = gv.abs() + self.value.abs() + t1.abs() + t2.abs();
        (rest, a * b, scale)
    }
}

/// Left side minus right side of the minorant inequality at `ν` for `(γ, c)`.
pub fn minorant_residual(e: &OrderedSVEnergy, gamma: (f64, f64), nu: (f64, f64), c: f64) -> Result<f64> {
    check_ordered(nu, "nu")?;
    let t = Tangent::at(e, gamma)?;
    let (rest, cross, _) = t.remainder(e, nu);
    Ok(rest - c * cross)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `c ≤ threshold`
    Upper,
    /// `c ≥ threshold`
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CBound {
    pub threshold: f64,
    pub kind: BoundKind,
}

impl CBound {
    pub fn admits(&self, c: f64) -> bool {
        match self.kind {
            BoundKind::Upper => c <= self.threshold,
            BoundKind::Lower => c >= self.threshold,
        }
    }
}

/// Solves the minorant inequality at `(γ, ν)` for `c`.
pub fn required_c_bound(e: &OrderedSVEnergy, gamma: (f64, f64), nu: (f64, f64)) -> Result<CBound> {
    check_ordered(nu, "nu")?;
    let t = Tangent::at(e, gamma)?;
    let (rest, cross, _) = t.remainder(e, nu);
    bound_from(rest, cross)
}

fn bound_from(rest: f64, cross: f64) -> Result<CBound> {
    if cross == 0.0 {
        return Err(Error::DegenerateCrossTerm);
    }
    Ok(CBound {
        threshold: rest / cross,
        kind: if cross > 0.0 {
            BoundKind::Upper
        } else {
            BoundKind::Lower
        },
    })
}

/// A `ν` whose half-line closes the feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub nu: (f64, f64),
    pub bound: CBound,
    /// Minorant residual at `ν` for the most favourable admissible `c` on the
    /// other side of the feasible set; negative certifies failure.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyWitness {
    pub gamma: (f64, f64),
    pub interval: CInterval,
    /// Feasible set after intersection: `[feasible_lo, feasible_hi]`, empty.
    pub feasible_lo: f64,
    pub feasible_hi: f64,
    /// `feasible_lo − feasible_hi > 0`.
    pub gap: f64,
    /// Upper half-line that binds, if it came from a `ν` rather than the interval.
    pub upper: Option<Binding>,
    pub lower: Option<Binding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyReport {
    pub energy: String,
    pub verdict: Verdict,
    pub resolution: String,
    pub gammas_checked: usize,
    pub skipped_diagonal: usize,
    pub skipped_seam: usize,
    pub falsified_gammas: usize,
    /// Witness at the lexicographically first falsified `γ`.
    pub witness: Option<PolyWitness>,
}

enum GammaOutcome {
    Checked(Option<PolyWitness>),
    Diagonal,
    Seam,
}

fn lex_sorted(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v.dedup();
    v
}

fn check_gamma(e: &OrderedSVEnergy, gamma: (f64, f64), nus: &[(f64, f64)]) -> GammaOutcome {
    let interval = match c_interval(e, gamma.0, gamma.1) {
        Ok(i) => i,
        Err(Error::Separation { .. }) | Err(Error::Domain(_)) => return GammaOutcome::Diagonal,
        Err(_) => return GammaOutcome::Seam,
    };
    let Ok(t) = Tangent::at(e, gamma) else {
        return GammaOutcome::Seam;
    };
    let slack_i = 64.0 * f64::EPSILON * (t.d1.abs() + t.d2.abs()) / (gamma.0 - gamma.1);
    let mut lo = interval.c_lo - slack_i;
    let mut hi = interval.c_hi + slack_i;
    let mut upper: Option<(f64, f64, CBound)> = None;
    let mut lower: Option<(f64, f64, CBound)> = None;
    for &nu in nus {
        if !(nu.1 > 0.0 && nu.0 >= nu.1) {
            continue;
        }
        let (rest, cross, scale) = t.remainder(e, nu);
        let Ok(bound) = bound_from(rest, cross) else {
            continue;
        };
        let slack = 64.0 * f64::EPSILON * scale / cross.abs();
        match bound.kind {
            BoundKind::Upper if bound.threshold + slack < hi => {
                hi = bound.threshold + slack;
                upper = Some((nu.0, nu.1, bound));
            }
            BoundKind::Lower if bound.threshold - slack > lo => {
                lo = bound.threshold - slack;
                lower = Some((nu.0, nu.1, bound));
            }
            _ => {}
        }
    }
    if lo <= hi {
        return GammaOutcome::Checked(None);
    }
    let residual_at = |nu: (f64, f64), c: f64| {
        let (rest, cross, _) = t.remainder(e, nu);
        rest - c * cross
    };
    let upper = upper.map(|(a, b, bound)| Binding {
        nu: (a, b),
        bound,
        residual: residual_at((a, b), lo),
    });
    let lower = lower.map(|(a, b, bound)| Binding {
        nu: (a, b),
        bound,
        residual: residual_at((a, b), hi),
    });
    GammaOutcome::Checked(Some(PolyWitness {
        gamma,
        interval,
        feasible_lo: lo,
        feasible_hi: hi,
        gap: lo - hi,
        upper,
        lower,
    }))
}

/// Runs the interval intersection for every `γ` against every `ν`. Points
/// are sorted first, so the verdict and witness do not depend on input order.
pub fn polyconvexity_falsify(
    e: &OrderedSVEnergy,
    gammas: &[(f64, f64)],
    nus: &[(f64, f64)],
) -> PolyReport {
    let gammas = lex_sorted(gammas);
    let nus = lex_sorted(nus);
    let outcomes: Vec<GammaOutcome> = gammas.par_iter().map(|&g| check_gamma(e, g, &nus)).collect();
    let mut report = PolyReport {
        energy: e.name().to_string(),
        verdict: Verdict::NoViolationFound,
        resolution: format!("{} gamma points x {} nu points", gammas.len(), nus.len()),
        gammas_checked: 0,
        skipped_diagonal: 0,
        skipped_seam: 0,
        falsified_gammas: 0,
        witness: None,
    };
    for o in outcomes {
        match o {
            GammaOutcome::Diagonal => report.skipped_diagonal += 1,
            GammaOutcome::Seam => report.skipped_seam += 1,
            GammaOutcome::Checked(w) => {
                report.gammas_checked += 1;
                if let Some(w) = w {
                    report.falsified_gammas += 1;
                    if report.witness.is_none() {
                        report.witness = Some(w);
                    }
                }
            }
        }
    }
    if report.witness.is_some() {
        report.verdict = Verdict::Fail;
    }
    report
}

/// Default grids: `γ` on 43 × 43 nodes with `ln γ ∈ [−2, 5]` (step 1/6) and
/// `ν` on 61 × 61 nodes with `ln ν ∈ [−2, 3]` (step 1/12). Both contain
/// `ln = 0, 1, 3, 4` as exact nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyGrids {
    pub gamma: DomainGrid,
    pub nu: DomainGrid,
}

impl Default for PolyGrids {
    fn default() -> Self {
        PolyGrids {
            gamma: DomainGrid::square(-2.0, 5.0, 43),
            nu: DomainGrid::square(-2.0, 3.0, 61),
        }
    }
}

impl PolyGrids {
    pub fn points(grid: &DomainGrid) -> Vec<(f64, f64)> {
        grid.ordered_points()
            .into_iter()
            .map(|p| (p.lambda1, p.lambda2))
            .collect()
    }

    pub fn run(&self, e: &OrderedSVEnergy) -> PolyReport {
        let mut r = polyconvexity_falsify(e, &Self::points(&self.gamma), &Self::points(&self.nu));
        r.resolution = format!(
            "gamma {}x{} on ln in [{}, {}], nu {}x{} on ln in [{}, {}] ({})",
            self.gamma.n_u,
            self.gamma.n_v,
            self.gamma.u_min,
            self.gamma.u_max,
            self.nu.n_u,
            self.nu.n_v,
            self.nu.u_min,
            self.nu.u_max,
            r.resolution
        );
        r
    }
}
