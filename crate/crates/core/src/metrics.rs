//! Error measures, convergence order, energy quadratures and grid sizing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg2::C64;
use crate::oracle::{exact_energies, OracleError};
use crate::potentials::{ChirpedSechParams, Dispersion, SignalGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {computed} computed values vs {exact} exact values")]
    LengthMismatch { computed: usize, exact: usize },
    #[error("{0}")]
    Domain(String),
    #[error("spectral grid is not uniform")]
    NonUniformGrid,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Normalizer `|φ₀|` with `φ₀ = exact` when `|exact| > 1`, else 1.
#[inline]
fn normalizer(exact: C64) -> f64 {
    let n = exact.norm();
    if n > 1.0 {
        n
    } else {
        1.0
    }
}

/// `|computed − exact| / |φ₀|`.
pub fn relative_error(computed: C64, exact: C64) -> f64 {
    (computed - exact).norm() / normalizer(exact)
}

/// Mean of the squared pointwise relative errors.
pub fn mse(computed: &[C64], exact: &[C64]) -> Result<f64, MetricsError> {
    if computed.len() != exact.len() || computed.is_empty() {
        return Err(MetricsError::LengthMismatch {
            computed: computed.len(),
            exact: exact.len(),
        });
    }
    let sum: f64 = computed
        .iter()
        .zip(exact)
        .map(|(c, e)| (c - e).norm_sqr() / normalizer(*e).powi(2))
        .sum();
    Ok(sum / computed.len() as f64)
}

/// Euclidean norm of the difference of two Jost vectors.
pub fn vector_deviation(computed: [C64; 2], exact: [C64; 2]) -> f64 {
    ((computed[0] - exact[0]).norm_sqr() + (computed[1] - exact[1]).norm_sqr()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderMeasurement {
    pub m: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub deviation_norms: (f64, f64),
}

/// `m = ln(dev1/dev2) / ln(τ1/τ2)` for deviations measured on steps `τ1 > τ2`.
pub fn approximation_order(dev1: f64, dev2: f64, tau1: f64, tau2: f64) -> Result<f64, MetricsError> {
    measure_order(dev1, dev2, tau1, tau2).map(|o| o.m)
}

pub fn measure_order(dev1: f64, dev2: f64, tau1: f64, tau2: f64) -> Result<OrderMeasurement, MetricsError> {
    if !(dev1 > 0.0 && dev2 > 0.0) {
        return Err(MetricsError::Domain(format!(
            "deviations must be positive, got {dev1:e} and {dev2:e}"
        )));
    }
    if !(tau1 > tau2 && tau2 > 0.0) {
        return Err(MetricsError::Domain(format!(
            "need tau1 > tau2 > 0, got {tau1:e} and {tau2:e}"
        )));
    }
    Ok(OrderMeasurement {
        m: (dev1 / dev2).ln() / (tau1 / tau2).ln(),
        tau1,
        tau2,
        deviation_norms: (dev1, dev2),
    })
}

/// `n` equally spaced points from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let h = (max - min) / (n - 1) as f64;
            (0..n)
                .map(|j| if j == n - 1 { max } else { min + h * j as f64 })
                .collect()
        }
    }
}

/// Trapezoid rule with step `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Step of a uniform grid, or an error if the grid is not uniform.
fn uniform_step(grid: &[f64]) -> Result<f64, MetricsError> {
    if grid.len() < 2 {
        return Err(MetricsError::Domain(format!(
            "need at least 2 grid points, got {}",
            grid.len()
        )));
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if h.is_nan() || h <= 0.0 {
        return Err(MetricsError::NonUniformGrid);
    }
    let tol = 1e-9 * h;
    if grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
        return Err(MetricsError::NonUniformGrid);
    }
    Ok(h)
}

/// `E_c = −(1/π) ∫ ln|a(ξ)|² dξ` by the trapezoid rule.
pub fn continuous_energy(a_values: &[C64], xi_grid: &[f64]) -> Result<f64, MetricsError> {
    if a_values.len() != xi_grid.len() {
        return Err(MetricsError::LengthMismatch {
            computed: a_values.len(),
            exact: xi_grid.len(),
        });
    }
    let h = uniform_step(xi_grid)?;
    let integrand: Vec<f64> = a_values.iter().map(|a| -a.norm_sqr().ln() / PI).collect();
    Ok(trapezoid(&integrand, h))
}

/// `|E_c + 4Σ Im ζ_k − C₀|` with `C₀ = ∫|q|²dt` from the signal samples.
pub fn parseval_check(
    signal: &SignalGrid,
    e_c_numeric: f64,
    eigenvalues: &[C64],
) -> Result<f64, MetricsError> {
    if signal.dispersion() != Dispersion::Anomalous {
        return Err(MetricsError::Domain(
            "the Parseval check is stated for sigma = 1 only".into(),
        ));
    }
    let eta: f64 = eigenvalues.iter().map(|z| z.im).sum();
    Ok((e_c_numeric + 4.0 * eta - signal.energy()).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e_c_numeric: f64,
    pub e_c_exact: f64,
    pub e_d_exact: f64,
    pub parseval_residual: f64,
}

/// Compares a numeric `E_c` with the closed forms; the residual is
/// `|E_c + E_d − 2A²|`.
pub fn energy_report(e_c_numeric: f64, params: ChirpedSechParams) -> Result<EnergyReport, MetricsError> {
    let e = exact_energies(params, Dispersion::Anomalous)?;
    let e_c_exact = e.continuous.expect("closed form exists for sigma = 1");
    Ok(EnergyReport {
        e_c_numeric,
        e_c_exact,
        e_d_exact: e.discrete,
        parseval_residual: (e_c_numeric + e.discrete - e.total).abs(),
    })
}

/// `M_min = ⌈2L·sqrt(ξ_max² + q_max²)/π⌉`, the node count that resolves the
/// fastest local frequency.
pub fn min_grid_points(half_width: f64, xi_max: f64, q_max: f64) -> usize {
    let omega = xi_max.hypot(q_max);
    (2.0 * half_width * omega / PI).ceil() as usize
}

/// `L_ξ = π/(2τ)`.
pub fn spectral_interval(tau: f64) -> f64 {
    PI / (2.0 * tau)
}
