//! Exact 2×2 linear algebra.
//!
//! Everything here is closed form: the singular value decomposition is built
//! from the polar angles of the conformal and anti-conformal parts of a
//! matrix, so no iteration or tolerance-driven loop is involved.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real 2×2 matrix with finite entries, stored row-major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Mat2 {
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::raw(1.0, 0.0, 0.0, 1.0);
    pub const ZERO: Mat2 = Mat2::raw(0.0, 0.0, 0.0, 0.0);

    /// Builds a matrix from row-major entries, rejecting NaN and infinities.
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Result<Self> {
        if [a11, a12, a21, a22].iter().all(|x| x.is_finite()) {
            Ok(Self::raw(a11, a12, a21, a22))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub(crate) const fn raw(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Self::raw(d1, 0.0, 0.0, d2)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::raw(c, -s, s, c)
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }
    pub fn a12(&self) -> f64 {
        self.a12
    }
    pub fn a21(&self) -> f64 {
        self.a21
    }
    pub fn a22(&self) -> f64 {
        self.a22
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> Self {
        Self::raw(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries().iter().map(|x| x * x).sum()
    }

    /// Operator (spectral) norm, i.e. the largest singular value.
    pub fn operator_norm(&self) -> f64 {
        svd_ordered(self).lambda1
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Whether `self` is a proper rotation up to `tol` in every entry of
    /// `QᵀQ - I` and in `det Q - 1`.
    pub fn is_rotation(&self, tol: f64) -> bool {
        let qtq = self.transpose() * *self;
        qtq.max_abs_diff(&Mat2::IDENTITY) <= tol && (self.det() - 1.0).abs() <= tol
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{:?}, {:?}], [{:?}, {:?}]]",
            self.a11, self.a12, self.a21, self.a22
        )
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a11, self.a12, self.a21, self.a22)
    }
}

impl TryFrom<[f64; 4]> for Mat2 {
    type Error = Error;

    fn try_from(e: [f64; 4]) -> Result<Self> {
        Mat2::new(e[0], e[1], e[2], e[3])
    }
}

impl From<Mat2> for [f64; 4] {
    fn from(m: Mat2) -> Self {
        m.entries()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::raw(
            self.a11 + o.a11,
            self.a12 + o.a12,
            self.a21 + o.a21,
            self.a22 + o.a22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::raw(
            self.a11 - o.a11,
            self.a12 - o.a12,
            self.a21 - o.a21,
            self.a22 - o.a22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2::raw(-self.a11, -self.a12, -self.a21, -self.a22)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::raw(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        Mat2::raw(self * m.a11, self * m.a12, self * m.a21, self * m.a22)
    }
}

/// Maps an angle into (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a <= -PI {
        a = PI;
    }
    a
}

/// Ordered singular value decomposition of a 2×2 matrix.
///
/// The source matrix is `rot(q1_angle)ᵀ · diag(lambda1, orientation·lambda2) ·
/// rot(q2_angle)ᵀ`, where `rot` is the counter-clockwise rotation and
/// `orientation` is the sign of the determinant (`+1` on GL⁺(2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedSV {
    pub lambda1: f64,
    pub lambda2: f64,
    pub q1_angle: f64,
    pub q2_angle: f64,
    pub orientation: f64,
}

impl OrderedSV {
    pub fn reconstruct(&self) -> Mat2 {
        Mat2::rotation(-self.q1_angle)
            * Mat2::diag(self.lambda1, self.orientation * self.lambda2)
            * Mat2::rotation(-self.q2_angle)
    }

    /// The rotations `Q1 = rot(q1)`, `Q2 = rot(q2)` with `Q1 · F · Q2` diagonal.
    pub fn diagonalizers(&self) -> (Mat2, Mat2) {
        (Mat2::rotation(self.q1_angle), Mat2::rotation(self.q2_angle))
    }
}

/// Relative size below which the anisotropic (or conformal) part of a matrix
/// is treated as absent and the corresponding angle fixed canonically.
const DEGENERATE_REL: f64 = 1e-14;

/// Closed-form ordered SVD. Defined on all of ℝ^{2×2}.
pub fn svd_ordered(m: &Mat2) -> OrderedSV {
    // Split into conformal part (e, h) and anti-conformal part (f, g).
    let e = 0.5 * (m.a11 + m.a22);
    let f = 0.5 * (m.a11 - m.a22);
    let g = 0.5 * (m.a21 + m.a12);
    let h = 0.5 * (m.a21 - m.a12);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let scale = q + r;

    let mut a1 = g.atan2(f);
    let mut a2 = h.atan2(e);
    if r <= DEGENERATE_REL * scale {
        // Scaled rotation: the right factor is arbitrary, take it to be id.
        a1 = a2;
    } else if q <= DEGENERATE_REL * scale {
        // Scaled reflection.
        a2 = a1;
    }
    let theta = 0.5 * (a2 - a1);
    let phi = 0.5 * (a2 + a1);

    let s2 = q - r;
    let (lambda2, orientation) = if s2 < 0.0 { (-s2, -1.0) } else { (s2, 1.0) };
    let q2_angle = if r <= DEGENERATE_REL * scale || q <= DEGENERATE_REL * scale {
        0.0
    } else {
        normalize_angle(-theta)
    };
    // With q2 pinned to zero the whole rotation is carried by the left factor.
    let q1_angle = if q2_angle == 0.0 {
        normalize_angle(-(phi + theta))
    } else {
        normalize_angle(-phi)
    };

    OrderedSV {
        lambda1: scale,
        lambda2,
        q1_angle,
        q2_angle,
        orientation,
    }
}

/// Linear distortion `K(F) = |||F|||² / det F = λmax / λmin`.
pub fn linear_distortion(m: &Mat2) -> Result<f64> {
    let det = m.det();
    if !(det > 0.0) {
        return Err(Error::Domain(format!(
            "linear distortion needs det F > 0, got {det:e}"
        )));
    }
    let sv = svd_ordered(m);
    Ok((sv.lambda1 / sv.lambda2).max(1.0))
}

/// The rotation angle of a proper rotation, in (−π, π].
pub fn rotation_angle(q: &Mat2) -> Result<f64> {
    if !q.is_rotation(1e-10) {
        return Err(Error::Domain(format!("{q:?} is not a rotation")));
    }
    Ok(normalize_angle(q.a21.atan2(q.a11)))
}

/// `Q^s = exp(s log Q)` with the principal logarithm on SO(2).
pub fn rotation_power(q: &Mat2, s: f64) -> Result<Mat2> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("rotation power s = {s} outside [0, 1]")));
    }
    let alpha = rotation_angle(q)?;
    Ok(Mat2::rotation(s * alpha))
}

/// A rank-one direction `magnitude · a(θ) b(φ)ᵀ` with unit vectors
/// `a(θ) = (cos θ, sin θ)` and `b(φ) = (cos φ, sin φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankOneDir {
    pub left_angle: f64,
    pub right_angle: f64,
    pub magnitude: f64,
}

impl RankOneDir {
    pub fn new(left_angle: f64, right_angle: f64, magnitude: f64) -> Result<Self> {
        if !(magnitude > 0.0) || !magnitude.is_finite() {
            return Err(Error::Domain(format!(
                "rank-one magnitude must be positive, got {magnitude}"
            )));
        }
        if !left_angle.is_finite() || !right_angle.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(RankOneDir {
            left_angle,
            right_angle,
            magnitude,
        })
    }

    pub fn unit(left_angle: f64, right_angle: f64) -> Self {
        RankOneDir {
            left_angle,
            right_angle,
            magnitude: 1.0,
        }
    }
}

pub fn rank_one_matrix(d: &RankOneDir) -> Mat2 {
    let (sa, ca) = d.left_angle.sin_cos();
    let (sb, cb) = d.right_angle.sin_cos();
    let m = d.magnitude;
    Mat2::raw(m * ca * cb, m * ca * sb, m * sa * cb, m * sa * sb)
}

/// Operator-norm distance from `F` to the boundary of GL⁺(2), which by the
/// Eckart–Young–Mirsky theorem is the smallest singular value.
pub fn boundary_distance(m: &Mat2) -> Result<f64> {
    let det = m.det();
    if !(det > 0.0) {
        return Err(Error::Domain(format!(
            "boundary distance needs det F > 0, got {det:e}"
        )));
    }
    Ok(svd_ordered(m).lambda2)
}
