//! Exact 2×2 complex matrix algebra.
//!
//! Every operator in the Zakharov-Shabat problem is a 2×2 complex matrix, so
//! the exponential, its derivative and the inverse all have closed forms built
//! on the Pauli decomposition `A = a0·σ0 + a1·σ1 + a2·σ2 + a3·σ3`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Below this |ω| the cosine and sinc factors switch to their Maclaurin series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;
/// Below this |ω|² the `(sinc − cos)/ω²` factor of the exponential derivative
/// switches to its series. The direct quotient loses about `1e-16/|ω|²` relative
/// accuracy, so the cutoff has to be much larger than the sinc one.
const DERIVATIVE_SERIES_CUTOFF: f64 = 0.25;

/// A 2×2 complex matrix `[[m11, m12], [m21, m22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
}

impl Mat2 {
    pub const fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn diag(d1: C64, d2: C64) -> Self {
        Self::new(d1, ZERO, ZERO, d2)
    }

    /// Pauli matrix σ1.
    pub const fn sigma1() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    /// Pauli matrix σ2.
    pub fn sigma2() -> Self {
        Self::new(ZERO, -I, I, ZERO)
    }

    /// Pauli matrix σ3.
    pub fn sigma3() -> Self {
        Self::new(ONE, ZERO, ZERO, -ONE)
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.m11 + self.m22
    }

    #[inline]
    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Conjugate transpose.
    #[inline]
    pub fn adjoint(&self) -> Self {
        Self::new(self.m11.conj(), self.m21.conj(), self.m12.conj(), self.m22.conj())
    }

    #[inline]
    pub fn scale(&self, k: C64) -> Self {
        Self::new(self.m11 * k, self.m12 * k, self.m21 * k, self.m22 * k)
    }

    #[inline]
    pub fn scale_re(&self, k: f64) -> Self {
        Self::new(self.m11 * k, self.m12 * k, self.m21 * k, self.m22 * k)
    }

    /// Frobenius norm, the norm used by every tolerance in this crate.
    pub fn norm(&self) -> f64 {
        (self.m11.norm_sqr() + self.m12.norm_sqr() + self.m21.norm_sqr() + self.m22.norm_sqr()).sqrt()
    }

    /// Closed-form inverse, `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == ZERO {
            return None;
        }
        let inv = det.inv();
        Some(Self::new(
            self.m22 * inv,
            -self.m12 * inv,
            -self.m21 * inv,
            self.m11 * inv,
        ))
    }

    /// Matrix-vector product.
    #[inline]
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    /// Matrix commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn is_finite(&self) -> bool {
        [self.m11, self.m12, self.m21, self.m22]
            .iter()
            .all(|z| z.is_finite())
    }
}

impl Default for Mat2 {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for Mat2 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.m11 + rhs.m11,
            self.m12 + rhs.m12,
            self.m21 + rhs.m21,
            self.m22 + rhs.m22,
        )
    }
}

impl AddAssign for Mat2 {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Mat2 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.m11 - rhs.m11,
            self.m12 - rhs.m12,
            self.m21 - rhs.m21,
            self.m22 - rhs.m22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.m11, -self.m12, -self.m21, -self.m22)
    }
}

impl Mul for Mat2 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

impl Mul<C64> for Mat2 {
    type Output = Self;
    #[inline]
    fn mul(self, k: C64) -> Self {
        self.scale(k)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Self;
    #[inline]
    fn mul(self, k: f64) -> Self {
        self.scale_re(k)
    }
}

/// Coefficients of `A = a0·σ0 + a1·σ1 + a2·σ2 + a3·σ3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliCoefficients {
    pub a0: C64,
    pub a1: C64,
    pub a2: C64,
    pub a3: C64,
}

impl PauliCoefficients {
    /// Rebuilds the matrix `a0·σ0 + a1·σ1 + a2·σ2 + a3·σ3`.
    pub fn to_matrix(&self) -> Mat2 {
        Mat2::new(
            self.a0 + self.a3,
            self.a1 - I * self.a2,
            self.a1 + I * self.a2,
            self.a0 - self.a3,
        )
    }

    /// The traceless part `a1·σ1 + a2·σ2 + a3·σ3`.
    fn traceless(&self) -> Mat2 {
        Mat2::new(self.a3, self.a1 - I * self.a2, self.a1 + I * self.a2, -self.a3)
    }

    /// `a1² + a2² + a3²`, which equals `−ω²`.
    #[inline]
    fn vector_square(&self) -> C64 {
        self.a1 * self.a1 + self.a2 * self.a2 + self.a3 * self.a3
    }

    #[inline]
    fn vector_dot(&self, other: &Self) -> C64 {
        self.a1 * other.a1 + self.a2 * other.a2 + self.a3 * other.a3
    }
}

pub fn pauli_decompose(a: &Mat2) -> PauliCoefficients {
    PauliCoefficients {
        a0: (a.m11 + a.m22) * 0.5,
        a1: (a.m12 + a.m21) * 0.5,
        a2: I * (a.m12 - a.m21) * 0.5,
        a3: (a.m11 - a.m22) * 0.5,
    }
}

/// `(cos ω, sin ω / ω)` as functions of `ω²`; both are even in ω so the
/// square-root branch never matters.
#[inline]
pub(crate) fn cos_sinc(omega_sq: C64) -> (C64, C64) {
    if omega_sq.norm() < SINC_SERIES_CUTOFF * SINC_SERIES_CUTOFF {
        let w = omega_sq;
        let c = ONE - w * (0.5 - w * (1.0 / 24.0 - w / 720.0));
        let s = ONE - w * (1.0 / 6.0 - w * (1.0 / 120.0 - w / 5040.0));
        (c, s)
    } else {
        let omega = omega_sq.sqrt();
        (omega.cos(), omega.sin() / omega)
    }
}

/// `(sin ω / ω − cos ω) / ω²`, even in ω, equal to 1/3 at ω = 0.
#[inline]
pub(crate) fn sinc_minus_cos_over_sq(omega_sq: C64) -> C64 {
    if omega_sq.norm() < DERIVATIVE_SERIES_CUTOFF {
        // Σ_{n≥1} (−1)^{n+1} 2n ω^{2n−2} / (2n+1)!
        const COEFFS: [f64; 9] = [
            1.0 / 3.0,
            -1.0 / 30.0,
            1.0 / 840.0,
            -1.0 / 45_360.0,
            1.0 / 3_991_680.0,
            -1.0 / 518_918_400.0,
            1.0 / 93_405_312_000.0,
            -1.0 / 22_230_464_256_000.0,
            1.0 / 6_758_061_133_824_000.0,
        ];
        COEFFS.iter().rev().fold(ZERO, |acc, &c| acc * omega_sq + c)
    } else {
        let (c, s) = cos_sinc(omega_sq);
        (s - c) / omega_sq
    }
}

/// Closed-form exponential `e^{a0}[cos ω·σ0 + (sin ω/ω)·(a1σ1 + a2σ2 + a3σ3)]`
/// with `ω² = −(a1² + a2² + a3²)`.
pub fn mat_exp(a: &Mat2) -> Mat2 {
    let p = pauli_decompose(a);
    let (c, s) = cos_sinc(-p.vector_square());
    let e0 = p.a0.exp();
    let b = p.traceless();
    (Mat2::identity().scale(c) + b.scale(s)).scale(e0)
}

/// Directional derivative `d/dλ e^{A(λ)}` given `A` and `dA/dλ`, using the
/// Pauli form of the exponential.
///
/// With `a = (a1, a2, a3)` and `a' = (a1', a2', a3')`:
/// `c' = s·(a·a')`, `s' = −(a·a')·(c − s)/ω²` and
/// `(e^A)' = e^{a0}[a0'(c σ0 + s B) + c' σ0 + s' B + s B']`.
pub fn exp_derivative(a: &Mat2, da: &Mat2) -> Mat2 {
    exp_with_derivative(a, da).1
}

/// `(e^A, d/dλ e^{A(λ)})` from one Pauli decomposition.
pub fn exp_with_derivative(a: &Mat2, da: &Mat2) -> (Mat2, Mat2) {
    let p = pauli_decompose(a);
    let dp = pauli_decompose(da);
    let omega_sq = -p.vector_square();
    let (c, s) = cos_sinc(omega_sq);
    let dot = p.vector_dot(&dp);
    let dc = s * dot;
    let ds = dot * sinc_minus_cos_over_sq(omega_sq);
    let b = p.traceless();
    let db = dp.traceless();
    let e0 = p.a0.exp();
    let base = Mat2::identity().scale(c) + b.scale(s);
    let derivative = (base.scale(dp.a0) + Mat2::identity().scale(dc) + b.scale(ds) + db.scale(s)).scale(e0);
    (base.scale(e0), derivative)
}

/// `d/dζ e^{τQ(ζ)}` for the Zakharov-Shabat matrix `Q = [[−iζ, q], [−σq*, iζ]]`.
///
/// Closed form with the local frequency `ω = sqrt(ζ² + σ|q|²)`:
/// `−(τζ/ω) sin(ωτ) I + (ζ/ω³)[τω cos(ωτ) − sin(ωτ)] Q − i (sin(ωτ)/ω) σ3`.
/// Every factor is even in ω, so it is evaluated through `x² = (ωτ)²`; the
/// formula is algebraic in τ and also holds for negative steps.
pub fn exp_zeta_derivative(q: C64, zeta: C64, tau: f64, sigma: f64) -> Mat2 {
    let x_sq = (zeta * zeta + sigma * q.norm_sqr()) * (tau * tau);
    let (_, s) = cos_sinc(x_sq);
    // sin(ωτ)/ω = τ·sinc, (τω cos − sin)/ω³ = −τ³·(sinc − cos)/x².
    let sin_over_omega = s * tau;
    let cubic = -sinc_minus_cos_over_sq(x_sq) * (tau * tau * tau);
    let qm = Mat2::new(-I * zeta, q, -sigma * q.conj(), I * zeta);
    Mat2::identity().scale(-zeta * tau * sin_over_omega)
        + qm.scale(zeta * cubic)
        + Mat2::sigma3().scale(-I * sin_over_omega)
}
