//! The built-in energies and the name registry used by the CLI.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::energy::{
    DomainGrid, GrowthFlags, OrderedSVEnergy, ScalarPart, Seam, Smoothness, SplitGrowthClaims,
    VolIsoSplitEnergy,
};
use crate::error::{Error, Result};
use crate::expr::EnergyDefinition;
use crate::planar::{svd_ordered, Mat2};

/// `2√2/3`: ADM is convex iff `|γ|` is at most this.
pub const ADM_CONVEX_LIMIT: f64 = 0.942_809_041_582_063_4;
/// ADM is polyconvex iff `|γ| ≤ 1`.
pub const ADM_POLYCONVEX_LIMIT: f64 = 1.0;
/// `2/√3`: ADM is rank-one convex iff `|γ|` is at most this.
pub const ADM_RANK_ONE_LIMIT: f64 = 1.154_700_538_379_251_5;

/// `ĥ(t) = t − log t`, `f(t) = log t + 1/t`.
pub fn w0() -> VolIsoSplitEnergy {
    let iso = ScalarPart::new(|t| t - t.ln()).with_derivatives(|t| 1.0 - 1.0 / t, |t| 1.0 / (t * t));
    let vol = ScalarPart::new(|t| t.ln() + 1.0 / t)
        .with_derivatives(|t| 1.0 / t - 1.0 / (t * t), |t| -1.0 / (t * t) + 2.0 / (t * t * t));
    VolIsoSplitEnergy::new("w0", iso, vol)
        .with_closed_form_infima(1.0, -1.0)
        .with_growth_claims(SplitGrowthClaims {
            iso_at_infinity: true,
            vol_at_infinity: true,
            vol_at_zero: true,
        })
}

fn aubert_value(a: f64, b: f64) -> f64 {
    (a.powi(4) + b.powi(4)) / 3.0 + 0.5 * a * a * b * b - 2.0 / 3.0 * (a.powi(3) * b + a * b.powi(3))
}

fn aubert_d1(a: f64, b: f64) -> f64 {
    4.0 / 3.0 * a.powi(3) + a * b * b - 2.0 * a * a * b - 2.0 / 3.0 * b.powi(3)
}

/// `⅓‖F‖⁴ − ⅙(det F)² − ⅔ det F ‖F‖²`.
pub fn aubert_matrix(f: &Mat2) -> f64 {
    let n2 = f.frobenius_norm_sq();
    let d = f.det();
    n2 * n2 / 3.0 - d * d / 6.0 - 2.0 / 3.0 * d * n2
}

pub fn aubert() -> OrderedSVEnergy {
    OrderedSVEnergy::new("aubert", aubert_value)
        .with_partials(|a, b| (aubert_d1(a, b), aubert_d1(b, a)))
        .with_extension(aubert_matrix)
        .with_growth(GrowthFlags {
            boundary_blowup: false,
            coercive: false,
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmParameter {
    pub gamma: f64,
}

impl AdmParameter {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::Domain(format!("ADM parameter must be finite, got {gamma}")));
        }
        Ok(AdmParameter { gamma })
    }
}

impl fmt::Display for AdmParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.gamma)
    }
}

/// `‖F‖²(‖F‖² − 2γ det F)` on ℝ^{2×2}.
pub fn adm_matrix(f: &Mat2, gamma: f64) -> f64 {
    let n2 = f.frobenius_norm_sq();
    n2 * (n2 - 2.0 * gamma * f.det())
}

/// ADM family. The ordered form is the GL⁺(2) restriction; the registered
/// extension is the unrestricted matrix formula.
pub fn adm(p: AdmParameter) -> OrderedSVEnergy {
    let g = p.gamma;
    OrderedSVEnergy::new(format!("adm:{p}"), move |a, b| {
        let s = a * a + b * b;
        s * s - 2.0 * g * s * a * b
    })
    .with_partials(move |a, b| {
        let s = a * a + b * b;
        (
            4.0 * a * s - 2.0 * g * (3.0 * a * a * b + b.powi(3)),
            4.0 * b * s - 2.0 * g * (3.0 * b * b * a + a.powi(3)),
        )
    })
    .with_extension(move |f| adm_matrix(f, g))
    .with_growth(GrowthFlags {
        boundary_blowup: false,
        coercive: g < 1.0,
    })
}

/// `λ̂₁λ̂₂` for `λ̂₁ ≤ 1` and `λ̂₁ + λ̂₂ − 1` for `λ̂₁ ≥ 1`.
pub fn silhavy_energy() -> OrderedSVEnergy {
    fn value(a: f64, b: f64) -> f64 {
        if a <= 1.0 {
            a * b
        } else {
            a + b - 1.0
        }
    }
    OrderedSVEnergy::new("silhavy", value)
        .with_partials(|a, b| if a < 1.0 { (b, a) } else { (1.0, 1.0) })
        .with_smoothness(Smoothness::C0)
        .with_seam(Seam::Lambda1(1.0))
        .with_extension(|f| {
            let sv = svd_ordered(f);
            value(sv.lambda1, sv.lambda2)
        })
        .with_growth(GrowthFlags {
            boundary_blowup: false,
            coercive: true,
        })
}

/// `λ₁² + λ₂² = ‖F‖²`, convex.
pub fn frobenius_squared() -> OrderedSVEnergy {
    OrderedSVEnergy::new("norm2", |a, b| a * a + b * b)
        .with_partials(|a, b| (2.0 * a, 2.0 * b))
        .with_extension(|f| f.frobenius_norm_sq())
        .with_growth(GrowthFlags {
            boundary_blowup: false,
            coercive: true,
        })
}

/// `λ₁λ₂ = det F`, polyaffine.
pub fn determinant() -> OrderedSVEnergy {
    OrderedSVEnergy::new("det", |a, b| a * b)
        .with_partials(|a, b| (b, a))
        .with_extension(|f| f.det())
        .with_growth(GrowthFlags {
            boundary_blowup: false,
            coercive: false,
        })
}

/// A registered energy; split energies keep their split form.
#[derive(Debug, Clone)]
pub enum Registered {
    Split(VolIsoSplitEnergy),
    Ordered(OrderedSVEnergy),
}

impl Registered {
    pub fn name(&self) -> &str {
        match self {
            Registered::Split(s) => s.name(),
            Registered::Ordered(o) => o.name(),
        }
    }

    pub fn ordered(&self) -> OrderedSVEnergy {
        match self {
            Registered::Split(s) => s.to_ordered(),
            Registered::Ordered(o) => o.clone(),
        }
    }

    pub fn split(&self) -> Option<&VolIsoSplitEnergy> {
        match self {
            Registered::Split(s) => Some(s),
            Registered::Ordered(_) => None,
        }
    }
}

pub const BUILTIN_NAMES: &[&str] = &["w0", "aubert", "adm:<gamma>", "silhavy", "norm2", "det"];

/// Resolves a CLI energy name: `w0`, `aubert`, `adm:<gamma>`, `silhavy`,
/// `norm2`, `det`, or `file:<path>` for a definition file. Every energy is
/// validated on the default grid before it is returned.
pub fn lookup(name: &str) -> Result<Registered> {
    let registered = match name {
        "w0" => Registered::Split(w0()),
        "aubert" => Registered::Ordered(aubert()),
        "silhavy" => Registered::Ordered(silhavy_energy()),
        "norm2" => Registered::Ordered(frobenius_squared()),
        "det" => Registered::Ordered(determinant()),
        _ => {
            if let Some(g) = name.strip_prefix("adm:") {
                let gamma: f64 = g
                    .trim()
                    .parse()
                    .map_err(|_| Error::UnknownEnergy(format!("{name} (bad gamma)")))?;
                Registered::Ordered(adm(AdmParameter::new(gamma)?))
            } else if let Some(path) = name.strip_prefix("file:") {
                let src = std::fs::read_to_string(path)?;
                Registered::Split(EnergyDefinition::parse(&src)?.to_split())
            } else {
                return Err(Error::UnknownEnergy(name.to_string()));
            }
        }
    };
    registered.ordered().validate(&DomainGrid::default())?;
    Ok(registered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn w0_values() {
        let g = w0().to_ordered();
        assert_eq!(g.eval_matrix(&Mat2::IDENTITY).unwrap(), 2.0);
        let v = g.eval_matrix(&Mat2::diag(E.powi(4), E.powi(3))).unwrap();
        assert!((v - (E + 6.0 + E.powi(-7))).abs() < 1e-12);
        assert!((v - 8.719_193_710_424_6).abs() < 1e-9);
        let v = g.eval_matrix(&Mat2::diag(E, 1.0)).unwrap();
        assert!((v - 3.086_161_269_630_487_6).abs() < 1e-12);
    }

    #[test]
    fn w0_partials_at_witness() {
        let g = w0().to_ordered();
        let (d1, d2) = g.partials(E.powi(4), E.powi(3)).unwrap();
        assert!((d1 - (E.powi(8) - 1.0) / E.powi(11)).abs() < 1e-15);
        assert!((d2 + (E.powi(7) * (E - 2.0) + 1.0) / E.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn aubert_values() {
        let g = aubert();
        assert!((g.eval_matrix(&Mat2::IDENTITY).unwrap() + 1.0 / 6.0).abs() < 1e-15);
        for t in [0.1, 0.7, 2.0, 5.0] {
            let v = g.eval_matrix(&Mat2::diag(t, t)).unwrap();
            assert!((v + t.powi(4) / 6.0).abs() < 1e-12 * t.powi(4).max(1.0));
        }
    }

    #[test]
    fn adm_values() {
        for gamma in [0.0, 0.5, 1.1] {
            let g = adm(AdmParameter::new(gamma).unwrap());
            for a in [0.5, 1.0, 3.0] {
                let v = g.eval_matrix(&Mat2::diag(a, a)).unwrap();
                let expected = 4.0 * a.powi(4) * (1.0 - gamma);
                assert!((v - expected).abs() < 1e-12 * a.powi(4).max(1.0));
            }
        }
        let g = adm(AdmParameter::new(1.1).unwrap());
        for n in [10.0, 100.0, 1000.0] {
            let v = g.eval_matrix(&Mat2::diag(1.0 / n, 1.0 / n)).unwrap();
            assert!((v - 4.0 * (1.0 - 1.1) / n.powi(4)).abs() < 1e-15);
        }
        assert!(AdmParameter::new(f64::NAN).is_err());
        let m = Mat2::new(0.3, -1.2, 0.8, -0.4).unwrap();
        let zero = adm(AdmParameter::new(0.0).unwrap());
        assert!((zero.eval_extended(&m).unwrap() - m.frobenius_norm_sq().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn silhavy_branches() {
        let g = silhavy_energy();
        assert_eq!(g.value(0.5, 0.5), 0.25);
        assert_eq!(g.value(2.0, 1.0), 2.0);
        for b in [0.1, 0.5, 1.0] {
            assert_eq!(g.value(1.0, b), b);
            assert!((g.value(1.0 + 1e-12, b) - b).abs() < 1e-11);
        }
        assert!(matches!(g.partials(1.0, 0.5), Err(Error::Seam { .. })));
    }

    #[test]
    fn registry() {
        for name in ["w0", "aubert", "silhavy", "adm:1.1", "adm:-0.5", "norm2", "det"] {
            let r = lookup(name).unwrap();
            assert_eq!(r.name(), name);
        }
        assert!(matches!(lookup("neo-hooke"), Err(Error::UnknownEnergy(_))));
        assert!(lookup("adm:abc").is_err());
        assert!(lookup("file:/definitely/not/here").is_err());
        assert!(lookup("w0").unwrap().split().is_some());
        assert!(lookup("aubert").unwrap().split().is_none());
    }
}
