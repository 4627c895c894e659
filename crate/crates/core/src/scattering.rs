//! Jost-solution propagation and extraction of the scattering data.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg2::{Mat2, C64, I, ZERO};
use crate::potentials::SignalGrid;
use crate::schemes::{
    inverse_transition, rk4_jost_step, transition, transition_with_derivative, NodeStencil, SchemeError,
    SchemeId,
};

/// Components are rescaled by `2^{−RESCALE_BITS}` once they exceed `2^{RESCALE_BITS}`
/// (and the other way round when they become that small).
const RESCALE_BITS: i32 = 500;

/// Initial step of the Romberg table for the RK4 derivative.
pub const ROMBERG_INITIAL_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatteringError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("Jost solution is no longer finite at node {node}")]
    Overflow { node: usize },
    #[error("both components of the right Jost solution vanish at the junction")]
    DegenerateMatch,
    #[error("|a'(zeta)| = {0:e} is too small to form a residual")]
    ZeroDerivative(f64),
    #[error("{0} is not supported by this operation")]
    Unsupported(SchemeId),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Scattering data at one spectral parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub zeta: C64,
    pub scheme: SchemeId,
    pub a: C64,
    pub b: C64,
    pub da_dzeta: Option<C64>,
    /// `|ψ₁|² + σ|ψ₂|²` after every step.
    pub h_trace: Option<Vec<f64>>,
}

impl ScatteringResult {
    /// `|a|² + σ|b|²`.
    pub fn invariant(&self, sigma: f64) -> f64 {
        self.a.norm_sqr() + sigma * self.b.norm_sqr()
    }
}

/// A Jost vector stored as `Ψ = ψ·exp(log_scale)·2^{exponent}` so that
/// exponential growth for `Im ζ ≠ 0` never overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostState {
    pub psi: [C64; 2],
    /// Optional ζ-derivative, sharing the scale of `psi`.
    pub dpsi: Option<[C64; 2]>,
    pub log_scale: C64,
    pub exponent: i64,
    /// Position in node units: `t = t_0 + τ·position`.
    pub position: f64,
}

impl JostState {
    /// The left Jost solution `(e^{−iζt}, 0)` at `t`.
    pub fn left(zeta: C64, t: f64, position: f64, with_derivative: bool) -> Self {
        Self {
            psi: [C64::new(1.0, 0.0), ZERO],
            dpsi: with_derivative.then(|| [-I * t, ZERO]),
            log_scale: -I * zeta * t,
            exponent: 0,
            position,
        }
    }

    /// The right Jost solution `(0, e^{iζt})` at `t`.
    pub fn right(zeta: C64, t: f64, position: f64) -> Self {
        Self {
            psi: [ZERO, C64::new(1.0, 0.0)],
            dpsi: None,
            log_scale: I * zeta * t,
            exponent: 0,
            position,
        }
    }

    /// Natural log of the common scale factor.
    pub fn ln_scale(&self) -> C64 {
        self.log_scale + self.exponent as f64 * LN_2
    }

    fn max_abs(&self) -> f64 {
        let mut m = self.psi[0].norm().max(self.psi[1].norm());
        if let Some(d) = self.dpsi {
            m = m.max(d[0].norm()).max(d[1].norm());
        }
        m
    }

    fn scale_by(&mut self, bits: i32) {
        let f = 2f64.powi(bits);
        self.psi = [self.psi[0] * f, self.psi[1] * f];
        if let Some(d) = self.dpsi.as_mut() {
            *d = [d[0] * f, d[1] * f];
        }
        self.exponent -= bits as i64;
    }

    fn renormalize(&mut self, node: usize) -> Result<(), ScatteringError> {
        let m = self.max_abs();
        if !m.is_finite() {
            return Err(ScatteringError::Overflow { node });
        }
        if m > 2f64.powi(RESCALE_BITS) {
            self.scale_by(-RESCALE_BITS);
        } else if m < 2f64.powi(-RESCALE_BITS) && m > 0.0 {
            self.scale_by(RESCALE_BITS);
        }
        Ok(())
    }

    fn apply(&mut self, t: &Mat2, node: usize) -> Result<(), ScatteringError> {
        self.psi = t.apply(self.psi);
        self.renormalize(node)
    }

    fn apply_with_derivative(&mut self, t: &Mat2, dt: &Mat2, node: usize) -> Result<(), ScatteringError> {
        let d = self.dpsi.expect("derivative not tracked");
        let from_t = dt.apply(self.psi);
        let carried = t.apply(d);
        self.dpsi = Some([from_t[0] + carried[0], from_t[1] + carried[1]]);
        self.apply(t, node)
    }

    /// `|Ψ₁|² + σ|Ψ₂|²` of the unscaled vector.
    pub fn invariant(&self, sigma: f64) -> f64 {
        let s = (2.0 * self.ln_scale().re).exp();
        (self.psi[0].norm_sqr() + sigma * self.psi[1].norm_sqr()) * s
    }
}

fn require_node_scheme(scheme: SchemeId) -> Result<(), ScatteringError> {
    if scheme.has_node_transition() {
        Ok(())
    } else {
        Err(ScatteringError::Unsupported(scheme))
    }
}

/// Applies the node transitions `nodes` to a state moving forward.
fn sweep_forward(
    signal: &SignalGrid,
    zeta: C64,
    scheme: SchemeId,
    state: &mut JostState,
    nodes: std::ops::Range<usize>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<(), ScatteringError> {
    let sigma = signal.sigma();
    for n in nodes {
        let st = NodeStencil::from_grid(signal, n, zeta);
        if state.dpsi.is_some() {
            let (t, dt) = transition_with_derivative(scheme, &st)?;
            state.apply_with_derivative(&t, &dt, n)?;
        } else {
            state.apply(&transition(scheme, &st)?, n)?;
        }
        state.position += 1.0;
        if let Some(h) = trace.as_deref_mut() {
            h.push(state.invariant(sigma));
        }
    }
    Ok(())
}

/// RK4 steps of `2τ` over even nodes from `from` to `to` (either direction).
fn sweep_rk4(
    signal: &SignalGrid,
    zeta: C64,
    state: &mut JostState,
    from: usize,
    to: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<(), ScatteringError> {
    let sigma = signal.sigma();
    let mut n = from;
    while n != to {
        let (start, backward) = if to > n { (n, false) } else { (n - 2, true) };
        let u = rk4_jost_step(signal, zeta, start, backward)?;
        state.apply(&u, n)?;
        n = if backward { n - 2 } else { n + 2 };
        state.position = n as f64;
        if let Some(h) = trace.as_deref_mut() {
            h.push(state.invariant(sigma));
        }
    }
    Ok(())
}

fn finish(state: &JostState, zeta: C64, t_end: f64) -> (C64, C64) {
    let ln = state.ln_scale();
    let phase = I * zeta * t_end;
    (
        state.psi[0] * (ln + phase).exp(),
        state.psi[1] * (ln - phase).exp(),
    )
}

/// Propagates the left Jost solution through the whole signal and extracts
/// `a(ζ)` and `b(ζ)`.
///
/// Node schemes run from `−L − τ/2` to `L − τ/2`; RK4 runs from `−L` to `L`
/// in steps of `2τ`.
pub fn propagate(
    signal: &SignalGrid,
    zeta: C64,
    scheme: SchemeId,
    record_h: bool,
) -> Result<ScatteringResult, ScatteringError> {
    let mut trace = record_h.then(|| Vec::with_capacity(signal.last_node()));
    let tau = signal.tau();
    let (state, t_end) = match scheme {
        SchemeId::Rk4 => {
            let last = signal.last_node();
            let mut state = JostState::left(zeta, signal.time(0), 0.0, false);
            sweep_rk4(signal, zeta, &mut state, 0, last, trace.as_mut())?;
            (state, signal.time(last as isize))
        }
        SchemeId::Taylor4 => return Err(ScatteringError::Unsupported(scheme)),
        _ => {
            let t0 = signal.time(0) - 0.5 * tau;
            let mut state = JostState::left(zeta, t0, -0.5, false);
            sweep_forward(
                signal,
                zeta,
                scheme,
                &mut state,
                0..signal.last_node(),
                trace.as_mut(),
            )?;
            (state, signal.time(signal.last_node() as isize) - 0.5 * tau)
        }
    };
    let (a, b) = finish(&state, zeta, t_end);
    Ok(ScatteringResult {
        zeta,
        scheme,
        a,
        b,
        da_dzeta: None,
        h_trace: trace,
    })
}

/// `a`, `b` and `da/dζ` from one sweep that carries `dΨ/dζ` alongside `Ψ`.
pub fn propagate_with_derivative(
    signal: &SignalGrid,
    zeta: C64,
    scheme: SchemeId,
) -> Result<ScatteringResult, ScatteringError> {
    require_node_scheme(scheme)?;
    let tau = signal.tau();
    let t0 = signal.time(0) - 0.5 * tau;
    let t_end = signal.time(signal.last_node() as isize) - 0.5 * tau;
    let mut state = JostState::left(zeta, t0, -0.5, true);
    sweep_forward(signal, zeta, scheme, &mut state, 0..signal.last_node(), None)?;
    let (a, b) = finish(&state, zeta, t_end);
    let dpsi = state.dpsi.expect("derivative tracked");
    let da = dpsi[0] * (state.ln_scale() + I * zeta * t_end).exp() + I * t_end * a;
    Ok(ScatteringResult {
        zeta,
        scheme,
        a,
        b,
        da_dzeta: Some(da),
        h_trace: None,
    })
}

/// Romberg extrapolation of central differences of the RK4 `a(ζ)`, starting
/// from `h = 1e-3` and halving the step `levels − 1` times.
pub fn derivative_rk4_romberg(signal: &SignalGrid, zeta: C64, levels: usize) -> Result<C64, ScatteringError> {
    romberg_table(signal, zeta, levels).map(|rows| rows[levels - 1][levels - 1])
}

/// Full Romberg table; row `j` holds the extrapolants from step `h₀/2^j`.
pub fn romberg_table(
    signal: &SignalGrid,
    zeta: C64,
    levels: usize,
) -> Result<Vec<Vec<C64>>, ScatteringError> {
    if levels < 2 {
        return Err(ScatteringError::InvalidArgument(format!(
            "Romberg needs at least 2 levels, got {levels}"
        )));
    }
    let a = |z: C64| propagate(signal, z, SchemeId::Rk4, false).map(|r| r.a);
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(levels);
    for j in 0..levels {
        let h = ROMBERG_INITIAL_STEP / 2f64.powi(j as i32);
        let mut row = vec![(a(zeta + h)? - a(zeta - h)?) / (2.0 * h)];
        for k in 1..=j {
            let factor = 4f64.powi(k as i32) - 1.0;
            let prev = row[k - 1];
            row.push(prev + (prev - rows[j - 1][k - 1]) / factor);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Default number of Romberg levels for RK4 derivatives.
pub const DEFAULT_ROMBERG_LEVELS: usize = 4;

/// `da/dζ` for any production scheme: the analytic sweep for node schemes and
/// Romberg extrapolation for RK4.
pub fn a_derivative(signal: &SignalGrid, zeta: C64, scheme: SchemeId) -> Result<C64, ScatteringError> {
    match scheme {
        SchemeId::Rk4 => derivative_rk4_romberg(signal, zeta, DEFAULT_ROMBERG_LEVELS),
        _ => Ok(propagate_with_derivative(signal, zeta, scheme)?
            .da_dzeta
            .expect("derivative computed")),
    }
}

/// `b(ζ_k)` at a discrete eigenvalue from the left Jost solution propagated
/// forward and the right one propagated backward to a junction at the centre
/// of the signal.
pub fn b_bidirectional(signal: &SignalGrid, zeta: C64, scheme: SchemeId) -> Result<C64, ScatteringError> {
    if zeta.im <= 0.0 {
        return Err(ScatteringError::InvalidArgument(format!(
            "bidirectional b needs Im zeta > 0, got {zeta}"
        )));
    }
    let m = signal.m();
    let last = signal.last_node();
    let (psi, phi) = match scheme {
        SchemeId::Rk4 => {
            let junction = m - m % 2;
            let mut psi = JostState::left(zeta, signal.time(0), 0.0, false);
            sweep_rk4(signal, zeta, &mut psi, 0, junction, None)?;
            let mut phi = JostState::right(zeta, signal.time(last as isize), last as f64);
            sweep_rk4(signal, zeta, &mut phi, last, junction, None)?;
            (psi, phi)
        }
        SchemeId::Taylor4 => return Err(ScatteringError::Unsupported(scheme)),
        _ => {
            let half = 0.5 * signal.tau();
            let mut psi = JostState::left(zeta, signal.time(0) - half, -0.5, false);
            sweep_forward(signal, zeta, scheme, &mut psi, 0..m, None)?;
            let mut phi = JostState::right(zeta, signal.time(last as isize) + half, last as f64 + 0.5);
            for n in (m..=last).rev() {
                let st = NodeStencil::from_grid(signal, n, zeta);
                phi.apply(&inverse_transition(scheme, &st)?, n)?;
                phi.position -= 1.0;
            }
            (psi, phi)
        }
    };
    debug_assert_eq!(psi.position, phi.position);
    let i = if phi.psi[0].norm() >= phi.psi[1].norm() {
        0
    } else {
        1
    };
    if phi.psi[i].norm() < 1e-250 {
        return Err(ScatteringError::DegenerateMatch);
    }
    Ok(psi.psi[i] / phi.psi[i] * (psi.ln_scale() - phi.ln_scale()).exp())
}

/// Phase coefficient `r_k = b(ζ_k)/a′(ζ_k)`.
pub fn residual(signal: &SignalGrid, zeta: C64, scheme: SchemeId) -> Result<C64, ScatteringError> {
    let b = b_bidirectional(signal, zeta, scheme)?;
    let da = a_derivative(signal, zeta, scheme)?;
    if da.norm() < 1e-14 {
        return Err(ScatteringError::ZeroDerivative(da.norm()));
    }
    Ok(b / da)
}

/// `propagate` over a list of real spectral parameters. Results keep the input
/// order and are identical whether or not the scan runs in parallel.
pub fn scan_continuous(
    signal: &SignalGrid,
    xi_grid: &[f64],
    scheme: SchemeId,
    parallel: bool,
) -> Vec<Result<ScatteringResult, ScatteringError>> {
    let one = |&xi: &f64| propagate(signal, C64::new(xi, 0.0), scheme, false);
    if parallel {
        xi_grid.par_iter().map(one).collect()
    } else {
        xi_grid.iter().map(one).collect()
    }
}
