//! Principal-branch complex log-gamma.

use std::f64::consts::PI;

use crate::linalg2::C64;

use super::OracleError;

const LANCZOS_G: f64 = 607.0 / 128.0;

// Godfrey's coefficient set for g = 607/128.
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_923_517,
    -59.597_960_355_475_491_248,
    14.136_097_974_741_747_174,
    -0.491_913_816_097_620_199_78,
    0.339_946_499_848_118_886_99e-4,
    0.465_236_289_270_485_756_65e-4,
    -0.983_744_753_048_795_646_77e-4,
    0.158_088_703_224_912_488_84e-3,
    -0.210_264_441_724_104_883_19e-3,
    0.217_439_618_115_212_643_20e-3,
    -0.164_318_106_536_763_890_22e-3,
    0.844_182_239_838_527_432_93e-4,
    -0.261_908_384_015_814_086_70e-4,
    0.368_991_826_595_316_227_04e-5,
];

/// `ln Γ(z)` on the principal branch (analytic off the negative real axis).
///
/// Arguments with `Re z < ½` are shifted up with `ln Γ(z) = ln Γ(z + n) − Σ ln(z + k)`,
/// which keeps the imaginary part on the principal branch rather than only
/// modulo 2π.
pub fn log_gamma(z: C64) -> Result<C64, OracleError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(OracleError::Domain(format!(
            "log_gamma of non-finite argument {z}"
        )));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(OracleError::Pole(z));
    }
    if z.re >= 0.5 {
        return Ok(lanczos(z));
    }
    let shift = (0.5 - z.re).ceil();
    let n = shift as usize;
    let mut correction = C64::new(0.0, 0.0);
    for k in 0..n {
        correction += (z + k as f64).ln();
    }
    Ok(lanczos(z + shift) - correction)
}

/// `1/Γ(z)` as a log, or `None` where `1/Γ` vanishes (the poles of Γ).
pub(crate) fn log_reciprocal_gamma(z: C64) -> Result<Option<C64>, OracleError> {
    match log_gamma(z) {
        Ok(v) => Ok(Some(-v)),
        Err(OracleError::Pole(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn lanczos(z: C64) -> C64 {
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS_COEFFS[0], 0.0);
    for (k, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        x += c / (z + k as f64);
    }
    let t = z + (LANCZOS_G + 0.5);
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}
