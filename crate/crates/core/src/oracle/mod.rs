//! Closed-form scattering data of the chirped hyperbolic secant
//! `q(t) = A·sech(t)^{1 + iC}`.
//!
//! With `D = sqrt(σA² − C²/4)`:
//!
//! ```text
//! a(ζ) = Γ(½ − i(ζ + C/2)) Γ(½ − i(ζ − C/2)) / (Γ(½ − iζ − D) Γ(½ − iζ + D))
//! b(ζ) = Γ(½ − i(ζ + C/2)) Γ(½ + i(ζ − C/2)) / (2^{iC} A Γ(−iC/2 − D) Γ(−iC/2 + D))
//! ```
//!
//! The discrete spectrum (σ = 1) sits at `ζ_k = i(D − ½ − k)`.

mod gamma;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gamma::log_gamma;
use gamma::log_reciprocal_gamma;

use crate::linalg2::{C64, I, ZERO};
use crate::potentials::{ChirpedSechParams, Dispersion};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("Gamma function pole at z = {0}")]
    Pole(C64),
    #[error("{0}")]
    Domain(String),
}

/// `a` and `b` at one spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectrum {
    pub zeta: C64,
    pub a: C64,
    pub b: C64,
}

/// Energy partition `E = E_d + E_c` with `E = ∫|q|²dt = 2A²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEnergies {
    pub total: f64,
    pub discrete: f64,
    /// `None` for σ = −1, where no closed form is available.
    pub continuous: Option<f64>,
}

/// Eigenvalues with their scattering data, ordered by decreasing `Im ζ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    pub eigenvalues: Vec<C64>,
    pub b_values: Vec<C64>,
    pub a_derivatives: Vec<C64>,
    pub residuals: Vec<C64>,
    pub energies: SpectralEnergies,
}

/// `D = sqrt(σA² − C²/4)` on the principal branch.
pub fn chirp_d(params: ChirpedSechParams, dispersion: Dispersion) -> C64 {
    let a = params.amplitude;
    let c = params.chirp;
    C64::new(dispersion.sign() * a * a - 0.25 * c * c, 0.0).sqrt()
}

/// Real `sqrt(A² − C²/4)` for σ = 1, `None` when it is imaginary.
fn real_d(params: ChirpedSechParams) -> Option<f64> {
    let d_sq = params.amplitude * params.amplitude - 0.25 * params.chirp * params.chirp;
    (d_sq >= 0.0).then(|| d_sq.sqrt())
}

fn sum_log_gamma(args: &[C64]) -> Result<C64, OracleError> {
    args.iter().try_fold(ZERO, |acc, &z| Ok(acc + log_gamma(z)?))
}

/// Sum of `−ln Γ` over the arguments, or `None` when one of them sits on a pole
/// (the reciprocal product vanishes).
fn sum_log_reciprocal(args: &[C64]) -> Result<Option<C64>, OracleError> {
    let mut acc = ZERO;
    for &z in args {
        match log_reciprocal_gamma(z)? {
            Some(v) => acc += v,
            None => return Ok(None),
        }
    }
    Ok(Some(acc))
}

/// `a(ζ)` and `b(ζ)` for the chirped secant; `A = 0` gives `a = 1, b = 0`.
pub fn exact_ab(
    zeta: C64,
    params: ChirpedSechParams,
    dispersion: Dispersion,
) -> Result<OracleSpectrum, OracleError> {
    if params.amplitude == 0.0 {
        return Ok(OracleSpectrum {
            zeta,
            a: C64::new(1.0, 0.0),
            b: ZERO,
        });
    }
    let half_c = 0.5 * params.chirp;
    let d = chirp_d(params, dispersion);
    let numerator_a = sum_log_gamma(&[0.5 - I * (zeta + half_c), 0.5 - I * (zeta - half_c)])?;
    let a = match sum_log_reciprocal(&[0.5 - I * zeta - d, 0.5 - I * zeta + d])? {
        Some(den) => (numerator_a + den).exp(),
        None => ZERO,
    };
    let b = match sum_log_reciprocal(&[-I * half_c - d, -I * half_c + d])? {
        Some(den) => {
            let numerator_b = sum_log_gamma(&[0.5 - I * (zeta + half_c), 0.5 + I * (zeta - half_c)])?;
            let prefactor = -(I * (params.chirp * LN_2)) - params.amplitude.ln();
            (numerator_b + den + prefactor).exp()
        }
        // Integer D: the potential is reflectionless on the real line.
        None => {
            let pole = 0.5 + I * (zeta - half_c);
            if pole.im == 0.0 && pole.re <= 0.0 && pole.re == pole.re.round() {
                // 0·∞ at an eigenvalue; the limit along the family is finite.
                let k = (d.re - 0.5 - zeta.im).round();
                if dispersion == Dispersion::Anomalous && zeta.re == 0.0 && k >= 0.0 {
                    return Ok(OracleSpectrum {
                        zeta,
                        a,
                        b: exact_bound_state_b(params, k as usize)?,
                    });
                }
                return Err(OracleError::Pole(pole));
            }
            ZERO
        }
    };
    Ok(OracleSpectrum { zeta, a, b })
}

/// `ζ_k = i(D − ½ − k)` for `k = 0..=⌊D − ½⌋`; empty when `D < ½` or `A² < C²/4`.
pub fn exact_eigenvalues(params: ChirpedSechParams) -> Vec<C64> {
    match real_d(params) {
        Some(d) if d >= 0.5 => {
            let count = (d - 0.5).floor() as usize + 1;
            (0..count).map(|k| C64::new(0.0, d - 0.5 - k as f64)).collect()
        }
        _ => Vec::new(),
    }
}

/// `φ_k = (−1)^k k!`, from `φ_{k+1} = −(k + 1)φ_k`.
pub fn phi_sequence(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut phi = 1.0;
    for k in 0..count {
        out.push(phi);
        phi *= -((k + 1) as f64);
    }
    out
}

/// `f(ζ) = Γ(½ − i(ζ + C/2)) Γ(½ − i(ζ − C/2)) / Γ(½ − iζ + D)`, the regular
/// factor of `a(ζ)` near its zeros.
pub fn regular_factor(zeta: C64, params: ChirpedSechParams) -> Result<C64, OracleError> {
    let half_c = 0.5 * params.chirp;
    let d = chirp_d(params, Dispersion::Anomalous);
    let num = sum_log_gamma(&[0.5 - I * (zeta + half_c), 0.5 - I * (zeta - half_c)])?;
    Ok((num - log_gamma(0.5 - I * zeta + d)?).exp())
}

/// `b(ζ_k)`, the ratio of the left and right Jost solutions at the k-th eigenvalue.
///
/// Evaluated as a finite product so that integer `D`, where the Gamma form of
/// `b` degenerates to `0·∞`, is covered too. `|b(ζ_k)| = 1` for this family.
pub fn exact_bound_state_b(params: ChirpedSechParams, k: usize) -> Result<C64, OracleError> {
    let d = match real_d(params) {
        Some(d) if d >= 0.5 && (k as f64) <= d - 0.5 => d,
        _ => return Err(OracleError::Domain(format!("no eigenvalue with index {k}"))),
    };
    let half_c = 0.5 * params.chirp;
    let mut ratio = C64::new(d, half_c);
    for j in 1..=k {
        let x = d - j as f64;
        ratio *= C64::new(x, half_c) / C64::new(x, -half_c);
    }
    let sign = if k.is_multiple_of(2) { -1.0 } else { 1.0 };
    Ok(ratio * sign * C64::from_polar(1.0 / params.amplitude, -params.chirp * LN_2))
}

/// `a′(ζ_k) = −i f(ζ_k) φ_k`.
pub fn exact_a_derivative(params: ChirpedSechParams, k: usize) -> Result<C64, OracleError> {
    let zetas = exact_eigenvalues(params);
    let zeta = *zetas
        .get(k)
        .ok_or_else(|| OracleError::Domain(format!("no eigenvalue with index {k}")))?;
    let phi = phi_sequence(k + 1)[k];
    Ok(-I * regular_factor(zeta, params)? * phi)
}

/// Phase coefficients `r_k = b(ζ_k)/a′(ζ_k)` for every eigenvalue.
pub fn exact_residuals(params: ChirpedSechParams) -> Result<Vec<C64>, OracleError> {
    let count = exact_eigenvalues(params).len();
    (0..count)
        .map(|k| Ok(exact_bound_state_b(params, k)? / exact_a_derivative(params, k)?))
        .collect()
}

/// `(E, E_d, E_c)` from `K = ⌊D + ½⌋`, `δ = frac(D + ½)`:
/// `E_d = 2(K + δ − ½)² − 2(δ − ½)²`, `E_c = 2(C²/4 + (δ − ½)²)`, `E = 2A²`.
pub fn exact_energies(
    params: ChirpedSechParams,
    dispersion: Dispersion,
) -> Result<SpectralEnergies, OracleError> {
    let total = 2.0 * params.amplitude * params.amplitude;
    if dispersion == Dispersion::Normal {
        return Ok(SpectralEnergies {
            total,
            discrete: 0.0,
            continuous: None,
        });
    }
    let d = real_d(params).ok_or_else(|| {
        OracleError::Domain(format!(
            "A² < C²/4 (A = {}, C = {}): no closed-form energy partition",
            params.amplitude, params.chirp
        ))
    })?;
    let shifted = d + 0.5;
    let k = shifted.floor();
    let delta = shifted - k;
    let discrete = 2.0 * (k + delta - 0.5).powi(2) - 2.0 * (delta - 0.5).powi(2);
    let continuous = 2.0 * (0.25 * params.chirp * params.chirp + (delta - 0.5).powi(2));
    Ok(SpectralEnergies {
        total,
        discrete,
        continuous: Some(continuous),
    })
}

/// Everything known in closed form about the discrete spectrum.
pub fn exact_discrete_spectrum(params: ChirpedSechParams) -> Result<DiscreteSpectrum, OracleError> {
    let eigenvalues = exact_eigenvalues(params);
    let mut b_values = Vec::with_capacity(eigenvalues.len());
    let mut a_derivatives = Vec::with_capacity(eigenvalues.len());
    for k in 0..eigenvalues.len() {
        b_values.push(exact_bound_state_b(params, k)?);
        a_derivatives.push(exact_a_derivative(params, k)?);
    }
    let residuals = b_values
        .iter()
        .zip(&a_derivatives)
        .map(|(b, da)| b / da)
        .collect();
    Ok(DiscreteSpectrum {
        eigenvalues,
        b_values,
        a_derivatives,
        residuals,
        energies: exact_energies(params, Dispersion::Anomalous)?,
    })
}

/// The left Jost solution at `t` reconstructed from `a` and `b`:
/// `Ψ(t) = (a e^{−iζt}, b e^{iζt})`, valid once `t` is past the support of `q`.
pub fn exact_jost_vector(spectrum: &OracleSpectrum, t: f64) -> [C64; 2] {
    let phase = I * spectrum.zeta * t;
    [spectrum.a * (-phase).exp(), spectrum.b * phase.exp()]
}
