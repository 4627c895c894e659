//! Per-node transition matrices and their ζ-derivatives.
//!
//! A transition `T` at node `n` maps the Jost vector from `t_n − τ/2` to
//! `t_n + τ/2` and is built from the stencil `q_{n−1}, q_n, q_{n+1}`. The
//! time derivatives of `Q` are replaced by central differences, which are
//! independent of ζ because only the off-diagonal part of `Q` varies in time.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg2::{exp_with_derivative, exp_zeta_derivative, mat_exp, Mat2, C64, I};
use crate::potentials::{potential_matrix, q_matrix, SignalGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    #[serde(rename = "BO")]
    Bo,
    #[serde(rename = "ES4")]
    Es4,
    #[serde(rename = "TES4")]
    Tes4,
    #[serde(rename = "CT4")]
    Ct4,
    #[serde(rename = "RK4")]
    Rk4,
    #[serde(rename = "TAYLOR4")]
    Taylor4,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::Bo,
        SchemeId::Es4,
        SchemeId::Tes4,
        SchemeId::Ct4,
        SchemeId::Rk4,
        SchemeId::Taylor4,
    ];

    /// Schemes that run on sampled signals.
    pub const PRODUCTION: [SchemeId; 5] = [
        SchemeId::Bo,
        SchemeId::Es4,
        SchemeId::Tes4,
        SchemeId::Ct4,
        SchemeId::Rk4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Bo => "BO",
            SchemeId::Es4 => "ES4",
            SchemeId::Tes4 => "TES4",
            SchemeId::Ct4 => "CT4",
            SchemeId::Rk4 => "RK4",
            SchemeId::Taylor4 => "TAYLOR4",
        }
    }

    /// Whether the scheme is a per-node transition matrix built from samples.
    /// RK4 steps over two cells and TAYLOR4 needs analytic derivatives.
    pub fn has_node_transition(self) -> bool {
        matches!(
            self,
            SchemeId::Bo | SchemeId::Es4 | SchemeId::Tes4 | SchemeId::Ct4
        )
    }

    /// Whether `|ψ₁|² + σ|ψ₂|²` is conserved exactly on the real axis.
    pub fn is_conservative(self) -> bool {
        self.has_node_transition()
    }

    /// Order of the global error.
    pub fn order(self) -> u32 {
        match self {
            SchemeId::Bo => 2,
            _ => 4,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == upper)
            .ok_or_else(|| format!("unknown scheme {s:?}; expected one of BO, ES4, TES4, CT4, RK4, TAYLOR4"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("CT4 Cayley factor is singular (|det| = {det:e})")]
    SingularCayley { det: f64 },
    #[error("{0} has no per-node transition matrix")]
    NotATransition(SchemeId),
    #[error("RK4 step from node {node} runs past the last node {last}")]
    Index { node: usize, last: usize },
}

/// Samples around node `n` plus the parameters every transition needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStencil {
    pub q_prev: C64,
    pub q_center: C64,
    pub q_next: C64,
    pub tau: f64,
    pub zeta: C64,
    pub sigma: f64,
}

impl NodeStencil {
    /// Stencil at node `n`, reading zeros outside the grid.
    #[inline]
    pub fn from_grid(grid: &SignalGrid, n: usize, zeta: C64) -> Self {
        let n = n as isize;
        Self {
            q_prev: grid.q(n - 1),
            q_center: grid.q(n),
            q_next: grid.q(n + 1),
            tau: grid.tau(),
            zeta,
            sigma: grid.sigma(),
        }
    }

    #[inline]
    pub fn q(&self) -> Mat2 {
        q_matrix(self.q_center, self.zeta, self.sigma)
    }

    /// `τ²·Q⁽¹⁾ = τ(Q_{n+1} − Q_{n−1})/2`.
    #[inline]
    fn first_difference(&self) -> Mat2 {
        potential_matrix(self.q_next - self.q_prev, self.sigma).scale_re(0.5 * self.tau)
    }

    /// `τ³·Q⁽²⁾ = τ(Q_{n+1} − 2Q_n + Q_{n−1})`.
    #[inline]
    fn second_difference(&self) -> Mat2 {
        potential_matrix(self.q_next - 2.0 * self.q_center + self.q_prev, self.sigma).scale_re(self.tau)
    }
}

/// `−iσ3 = dQ/dζ`.
#[inline]
fn dq_dzeta() -> Mat2 {
    Mat2::diag(-I, I)
}

/// BO: `T = e^{τQ_n}`.
pub fn transition_bo(st: &NodeStencil) -> Mat2 {
    mat_exp(&st.q().scale_re(st.tau))
}

fn es4_exponent(st: &NodeStencil) -> Mat2 {
    let q = st.q();
    let d1 = st.first_difference();
    let d2 = st.second_difference();
    // τQ + τ³(Q⁽²⁾/24 + (Q⁽¹⁾Q − QQ⁽¹⁾)/12)
    q.scale_re(st.tau) + d2.scale_re(1.0 / 24.0) + d1.commutator(&q).scale_re(st.tau / 12.0)
}

fn es4_exponent_derivative(st: &NodeStencil) -> Mat2 {
    let d1 = st.first_difference();
    dq_dzeta().scale_re(st.tau) + d1.commutator(&dq_dzeta()).scale_re(st.tau / 12.0)
}

/// ES4: `T = exp(τQ_n + τ³F₃)` with `F₃ = Q⁽²⁾/24 + (Q⁽¹⁾Q_n − Q_nQ⁽¹⁾)/12`.
pub fn transition_es4(st: &NodeStencil) -> Mat2 {
    mat_exp(&es4_exponent(st))
}

/// The ζ-free outer exponents `(X + Y, −X + Y)` of TES4 with
/// `X = τ²Q⁽¹⁾/12` and `Y = τ³Q⁽²⁾/48`.
fn tes4_outer(st: &NodeStencil) -> (Mat2, Mat2) {
    let x = st.first_difference().scale_re(1.0 / 12.0);
    let y = st.second_difference().scale_re(1.0 / 48.0);
    (x + y, y - x)
}

/// TES4: `T = e^{X+Y} e^{τQ_n} e^{−X+Y}`.
pub fn transition_tes4(st: &NodeStencil) -> Mat2 {
    let (left, right) = tes4_outer(st);
    mat_exp(&left) * transition_bo(st) * mat_exp(&right)
}

struct Ct4Parts {
    half: Mat2,
    cayley_left: Mat2,
    cayley_right: Mat2,
}

fn ct4_sum(st: &NodeStencil, full: &Mat2, full_inv: &Mat2) -> Mat2 {
    let dp = potential_matrix(st.q_next - st.q_center, st.sigma);
    let dm = potential_matrix(st.q_prev - st.q_center, st.sigma);
    // M_{n+1} + M_{n−1}
    *full_inv * dp * *full + *full * dm * *full_inv
}

fn ct4_parts(st: &NodeStencil) -> Ct4Parts {
    let q = st.q();
    let half = mat_exp(&q.scale_re(0.5 * st.tau));
    let full = half * half;
    let full_inv = mat_exp(&q.scale_re(-st.tau));
    let s = ct4_sum(st, &full, &full_inv).scale_re(st.tau / 48.0);
    Ct4Parts {
        half,
        cayley_left: Mat2::identity() - s,
        cayley_right: Mat2::identity() + s,
    }
}

fn checked_inverse(m: &Mat2) -> Result<Mat2, SchemeError> {
    let det = m.det().norm();
    if det < 1e-14 {
        return Err(SchemeError::SingularCayley { det });
    }
    m.inverse().ok_or(SchemeError::SingularCayley { det })
}

/// CT4: `T = e^{τQ/2} [I − τS/48]⁻¹ [I + τS/48] e^{τQ/2}` with
/// `S = e^{−τQ}(Q_{n+1} − Q_n)e^{τQ} + e^{τQ}(Q_{n−1} − Q_n)e^{−τQ}`.
pub fn transition_ct4(st: &NodeStencil) -> Result<Mat2, SchemeError> {
    let p = ct4_parts(st);
    Ok(p.half * checked_inverse(&p.cayley_left)? * p.cayley_right * p.half)
}

/// `T` for any scheme with a node transition.
pub fn transition(scheme: SchemeId, st: &NodeStencil) -> Result<Mat2, SchemeError> {
    match scheme {
        SchemeId::Bo => Ok(transition_bo(st)),
        SchemeId::Es4 => Ok(transition_es4(st)),
        SchemeId::Tes4 => Ok(transition_tes4(st)),
        SchemeId::Ct4 => transition_ct4(st),
        SchemeId::Rk4 | SchemeId::Taylor4 => Err(SchemeError::NotATransition(scheme)),
    }
}

/// `T⁻¹`; exponential factors are inverted by negating their exponents.
pub fn inverse_transition(scheme: SchemeId, st: &NodeStencil) -> Result<Mat2, SchemeError> {
    match scheme {
        SchemeId::Bo => Ok(mat_exp(&st.q().scale_re(-st.tau))),
        SchemeId::Es4 => Ok(mat_exp(&-es4_exponent(st))),
        SchemeId::Tes4 => {
            let (left, right) = tes4_outer(st);
            Ok(mat_exp(&-right) * mat_exp(&st.q().scale_re(-st.tau)) * mat_exp(&-left))
        }
        SchemeId::Ct4 => {
            let p = ct4_parts(st);
            let half_inv = mat_exp(&st.q().scale_re(-0.5 * st.tau));
            Ok(half_inv * checked_inverse(&p.cayley_right)? * p.cayley_left * half_inv)
        }
        SchemeId::Rk4 | SchemeId::Taylor4 => Err(SchemeError::NotATransition(scheme)),
    }
}

/// `(T, dT/dζ)` at the stencil, sharing the exponentials between the two.
pub fn transition_with_derivative(scheme: SchemeId, st: &NodeStencil) -> Result<(Mat2, Mat2), SchemeError> {
    match scheme {
        SchemeId::Bo => Ok((
            transition_bo(st),
            exp_zeta_derivative(st.q_center, st.zeta, st.tau, st.sigma),
        )),
        SchemeId::Es4 => Ok(exp_with_derivative(
            &es4_exponent(st),
            &es4_exponent_derivative(st),
        )),
        SchemeId::Tes4 => {
            let (left, right) = tes4_outer(st);
            let el = mat_exp(&left);
            let er = mat_exp(&right);
            let t = el * transition_bo(st) * er;
            let dt = el * exp_zeta_derivative(st.q_center, st.zeta, st.tau, st.sigma) * er;
            Ok((t, dt))
        }
        SchemeId::Ct4 => ct4_with_derivative(st),
        SchemeId::Rk4 | SchemeId::Taylor4 => Err(SchemeError::NotATransition(scheme)),
    }
}

/// `dT/dζ` at the stencil.
pub fn transition_zeta_derivative(scheme: SchemeId, st: &NodeStencil) -> Result<Mat2, SchemeError> {
    transition_with_derivative(scheme, st).map(|(_, dt)| dt)
}

fn ct4_with_derivative(st: &NodeStencil) -> Result<(Mat2, Mat2), SchemeError> {
    let q = st.q();
    let (tau, zeta, sigma, qn) = (st.tau, st.zeta, st.sigma, st.q_center);
    let half = mat_exp(&q.scale_re(0.5 * tau));
    let full = half * half;
    let full_inv = mat_exp(&q.scale_re(-tau));
    let d_half = exp_zeta_derivative(qn, zeta, 0.5 * tau, sigma);
    let d_full = exp_zeta_derivative(qn, zeta, tau, sigma);
    let d_full_inv = exp_zeta_derivative(qn, zeta, -tau, sigma);

    let dp = potential_matrix(st.q_next - qn, sigma);
    let dm = potential_matrix(st.q_prev - qn, sigma);
    let k = tau / 48.0;
    let s = (full_inv * dp * full + full * dm * full_inv).scale_re(k);
    let ds =
        (d_full_inv * dp * full + full_inv * dp * d_full + d_full * dm * full_inv + full * dm * d_full_inv)
            .scale_re(k);

    let left_inv = checked_inverse(&(Mat2::identity() - s))?;
    let right = Mat2::identity() + s;
    let core = left_inv * right;
    // d(P⁻¹N) = P⁻¹ dS P⁻¹ N + P⁻¹ dS with P = I − S, N = I + S
    let d_core = left_inv * ds * core + left_inv * ds;

    let t = half * core * half;
    let dt = d_half * core * half + half * d_core * half + half * core * d_half;
    Ok((t, dt))
}

/// Analytic samples `q, q′, q″, q‴` at one node, for the Taylor reference operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorStencil {
    pub derivatives: [C64; 4],
    pub tau: f64,
    pub zeta: C64,
    pub sigma: f64,
}

/// The expansion coefficients `(T₂, T₃, T₄)` of a fourth-order one-step
/// operator whose cell is `[t + (s−1)τ, t + sτ]` around the expansion point `t`.
pub fn taylor_coefficients(s: f64, st: &TaylorStencil) -> (Mat2, Mat2, Mat2) {
    let q = q_matrix(st.derivatives[0], st.zeta, st.sigma);
    let q1 = potential_matrix(st.derivatives[1], st.sigma);
    let q2 = potential_matrix(st.derivatives[2], st.sigma);
    let q3 = potential_matrix(st.derivatives[3], st.sigma);

    let qq = q * q;
    let big_q2 = q1 + qq;
    let big_q3 = q2 + (q1 * q).scale_re(2.0) + q * q1 + qq * q;
    let big_q4 = q3
        + (q2 * q).scale_re(3.0)
        + q * q2
        + (q1 * q1).scale_re(3.0)
        + (q1 * qq).scale_re(3.0)
        + (q * q1 * q).scale_re(2.0)
        + qq * q1
        + qq * qq;

    let sb = s - 1.0;
    let t2 = big_q2.scale_re((2.0 * s - 1.0) / 2.0) - qq.scale_re(sb);
    let t3 = big_q3.scale_re((3.0 * s * s - 3.0 * s + 1.0) / 6.0)
        - (q * big_q2).scale_re(sb * sb / 2.0)
        - (big_q2 * q).scale_re((2.0 * s - 1.0) * sb / 2.0)
        + (qq * q).scale_re(sb * sb);
    let t4 = big_q4.scale_re((2.0 * s - 1.0) * (2.0 * s * s - 2.0 * s + 1.0) / 24.0)
        - (q * big_q3).scale_re(sb * sb * sb / 6.0)
        - (t2 * big_q2).scale_re(sb * sb / 2.0)
        - (t3 * q).scale_re(sb);
    (t2, t3, t4)
}

/// Reference operator `T = E + τQ + τ²T₂ + τ³T₃ + τ⁴T₄` in the symmetric
/// case `s = ½`, where the cell is centred on the node.
pub fn transition_taylor4(st: &TaylorStencil) -> Mat2 {
    let tau = st.tau;
    let q = q_matrix(st.derivatives[0], st.zeta, st.sigma);
    let (t2, t3, t4) = taylor_coefficients(0.5, st);
    Mat2::identity()
        + q.scale_re(tau)
        + t2.scale_re(tau * tau)
        + t3.scale_re(tau.powi(3))
        + t4.scale_re(tau.powi(4))
}

/// Envelope generator `R(t) = [[0, q e^{2iζt}], [−σq* e^{−2iζt}, 0]]` with `t`
/// measured from a local origin.
#[inline]
fn envelope_generator(q: C64, zeta: C64, t: f64, sigma: f64) -> Mat2 {
    let phase = (2.0 * I * zeta * t).exp();
    Mat2::new(
        C64::new(0.0, 0.0),
        q * phase,
        -sigma * q.conj() / phase,
        C64::new(0.0, 0.0),
    )
}

/// Classical RK4 over a step `h` for `χ′ = R(t)χ`, with `R` sampled at the
/// start, middle and end. Returns the linear update matrix.
fn rk4_matrix(r0: Mat2, r1: Mat2, r2: Mat2, h: f64) -> Mat2 {
    let id = Mat2::identity();
    let k1 = r0;
    let k2 = r1 * (id + k1.scale_re(0.5 * h));
    let k3 = r1 * (id + k2.scale_re(0.5 * h));
    let k4 = r2 * (id + k3.scale_re(h));
    id + (k1 + k2.scale_re(2.0) + k3.scale_re(2.0) + k4).scale_re(h / 6.0)
}

/// RK4 update in envelope variables measured from the step centre `t_{n+1}`.
fn rk4_local(grid: &SignalGrid, zeta: C64, n: usize, backward: bool) -> Result<Mat2, SchemeError> {
    let last = grid.last_node();
    if n + 2 > last {
        return Err(SchemeError::Index { node: n, last });
    }
    let tau = grid.tau();
    let sigma = grid.sigma();
    let n = n as isize;
    let r_start = envelope_generator(grid.q(n), zeta, -tau, sigma);
    let r_mid = envelope_generator(grid.q(n + 1), zeta, 0.0, sigma);
    let r_end = envelope_generator(grid.q(n + 2), zeta, tau, sigma);
    Ok(if backward {
        rk4_matrix(r_end, r_mid, r_start, -2.0 * tau)
    } else {
        rk4_matrix(r_start, r_mid, r_end, 2.0 * tau)
    })
}

/// One RK4 step of `2τ` from node `n` (even) to `n + 2` for the envelope
/// `χ₁ = ψ₁e^{iζt}`, `χ₂ = ψ₂e^{−iζt}`, returned as the matrix acting on χ.
pub fn step_rk4(grid: &SignalGrid, zeta: C64, n: usize) -> Result<Mat2, SchemeError> {
    let local = rk4_local(grid, zeta, n, false)?;
    // χ = diag(e^{iζt_c}, e^{−iζt_c}) χ_local
    let phase = (I * zeta * grid.time(n as isize + 1)).exp();
    Ok(Mat2::new(
        local.m11,
        local.m12 * phase * phase,
        local.m21 / (phase * phase),
        local.m22,
    ))
}

/// The RK4 step from node `n` to `n + 2` (or back, with `backward`) acting on
/// the Jost vector ψ itself. Phases stay of size `e^{|ζ|τ}`, so the step is
/// safe for any `Im ζ`.
pub fn rk4_jost_step(grid: &SignalGrid, zeta: C64, n: usize, backward: bool) -> Result<Mat2, SchemeError> {
    let local = rk4_local(grid, zeta, n, backward)?;
    let e = (I * zeta * grid.tau()).exp();
    // ψ = diag(e^{−iζ(t−t_c)}, e^{iζ(t−t_c)}) χ_local
    let d = if backward {
        Mat2::diag(e, e.inv())
    } else {
        Mat2::diag(e.inv(), e)
    };
    Ok(d * local * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{chirped_sech, ChirpedSechParams, Dispersion};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn stencil(q: [C64; 3], tau: f64, zeta: C64, sigma: f64) -> NodeStencil {
        NodeStencil {
            q_prev: q[0],
            q_center: q[1],
            q_next: q[2],
            tau,
            zeta,
            sigma,
        }
    }

    /// Stencil and analytic derivatives of the chirped secant at time `t`.
    fn sech_stencils(params: ChirpedSechParams, t: f64, tau: f64, zeta: C64) -> (NodeStencil, TaylorStencil) {
        let st = stencil(
            [params.value(t - tau), params.value(t), params.value(t + tau)],
            tau,
            zeta,
            1.0,
        );
        let ts = TaylorStencil {
            derivatives: params.derivatives(t),
            tau,
            zeta,
            sigma: 1.0,
        };
        (st, ts)
    }

    fn free_cell(zeta: C64, tau: f64) -> Mat2 {
        Mat2::diag((-I * zeta * tau).exp(), (I * zeta * tau).exp())
    }

    fn any_transition(scheme: SchemeId, st: &NodeStencil) -> Mat2 {
        transition(scheme, st).unwrap()
    }

    const NODE_SCHEMES: [SchemeId; 4] = [SchemeId::Bo, SchemeId::Es4, SchemeId::Tes4, SchemeId::Ct4];

    #[test]
    fn scheme_names_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.name().parse::<SchemeId>().unwrap(), id);
        }
        assert_eq!("es4".parse::<SchemeId>().unwrap(), SchemeId::Es4);
        assert!("RK5".parse::<SchemeId>().is_err());
        assert!(!SchemeId::Rk4.has_node_transition());
        assert!(matches!(
            transition(SchemeId::Rk4, &stencil([c(0.0, 0.0); 3], 0.1, c(1.0, 0.0), 1.0)),
            Err(SchemeError::NotATransition(SchemeId::Rk4))
        ));
    }

    #[test]
    fn free_transitions() {
        let zeta = c(1.7, 0.3);
        let st = stencil([c(0.0, 0.0); 3], 0.05, zeta, 1.0);
        for scheme in NODE_SCHEMES {
            let t = any_transition(scheme, &st);
            assert!((t - free_cell(zeta, 0.05)).norm() < 1e-15, "{scheme}");
            let dt = transition_zeta_derivative(scheme, &st).unwrap();
            let want = Mat2::diag(
                -0.05 * I * (-I * zeta * 0.05).exp(),
                0.05 * I * (I * zeta * 0.05).exp(),
            );
            assert!((dt - want).norm() < 1e-15, "{scheme}");
        }
    }

    #[test]
    fn constant_stencil_reduces_to_bo() {
        let q = c(1.2, -0.7);
        let st = stencil([q; 3], 0.08, c(0.9, 0.0), 1.0);
        let bo = transition_bo(&st);
        for scheme in [SchemeId::Es4, SchemeId::Tes4, SchemeId::Ct4] {
            assert!((any_transition(scheme, &st) - bo).norm() < 1e-14, "{scheme}");
        }
    }

    #[test]
    fn bo_product_over_constant_signal_is_exact() {
        let q = c(0.8, 0.3);
        let st = stencil([q; 3], 0.01, c(2.0, 0.0), 1.0);
        let t = transition_bo(&st);
        let mut prod = Mat2::identity();
        for _ in 0..100 {
            prod = t * prod;
        }
        let exact = mat_exp(&st.q().scale_re(1.0));
        assert!((prod - exact).norm() <= 1e-11 * exact.norm());
    }

    #[test]
    fn bo_is_unitary_example() {
        let st = stencil([c(2.0, 1.0); 3], 0.05, c(0.4, 0.0), 1.0);
        let t = transition_bo(&st);
        assert!((t.adjoint() * t - Mat2::identity()).norm() <= 1e-13);
    }

    #[test]
    fn inverse_transitions() {
        let st = stencil([c(1.0, 0.5), c(2.0, -0.2), c(1.5, 0.1)], 0.05, c(0.3, 2.5), 1.0);
        for scheme in NODE_SCHEMES {
            let t = any_transition(scheme, &st);
            let inv = inverse_transition(scheme, &st).unwrap();
            assert!((t * inv - Mat2::identity()).norm() < 1e-13, "{scheme}");
        }
    }

    #[test]
    fn es4_and_tes4_share_expansion() {
        let params = ChirpedSechParams::new(5.25, 0.0);
        let gap = |tau: f64| {
            let (st, _) = sech_stencils(params, 0.6, tau, c(3.0, 0.0));
            (transition_es4(&st) - transition_tes4(&st)).norm()
        };
        let ratio = gap(0.02) / gap(0.01);
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn richardson_ratios_against_taylor() {
        let cases = [
            (ChirpedSechParams::new(5.25, 0.0), 0.7, c(2.0, 0.0)),
            (ChirpedSechParams::new(5.2, 4.0), -0.4, c(-1.0, 0.0)),
            (ChirpedSechParams::new(3.25, 1.0), 1.3, c(0.5, 0.0)),
        ];
        for (params, t, zeta) in cases {
            for scheme in NODE_SCHEMES {
                let gap = |tau: f64| {
                    let (st, ts) = sech_stencils(params, t, tau, zeta);
                    (any_transition(scheme, &st) - transition_taylor4(&ts)).norm()
                };
                let ratio = gap(0.02) / gap(0.01);
                let window = if scheme == SchemeId::Bo {
                    6.0..=10.0
                } else {
                    24.0..=40.0
                };
                assert!(window.contains(&ratio), "{scheme} {params:?}: ratio {ratio}");
            }
        }
    }

    /// Exact cell propagator from many BO micro-steps with analytic samples.
    fn micro_step_flow(params: ChirpedSechParams, t: f64, tau: f64, zeta: C64) -> Mat2 {
        let steps = 1000;
        let h = tau / steps as f64;
        let mut prod = Mat2::identity();
        for j in 0..steps {
            let tm = t - 0.5 * tau + (j as f64 + 0.5) * h;
            prod = mat_exp(&q_matrix(params.value(tm), zeta, 1.0).scale_re(h)) * prod;
        }
        prod
    }

    #[test]
    fn taylor_operator_matches_exact_flow() {
        let params = ChirpedSechParams::new(2.0, 1.0);
        let zeta = c(1.5, 0.0);
        let gap = |tau: f64| {
            let ts = TaylorStencil {
                derivatives: params.derivatives(0.3),
                tau,
                zeta,
                sigma: 1.0,
            };
            (transition_taylor4(&ts) - micro_step_flow(params, 0.3, tau, zeta)).norm()
        };
        let ratio = gap(0.2) / gap(0.1);
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn taylor_operator_reduces_to_exponential_series() {
        let q = c(0.9, -0.4);
        let zeta = c(1.1, 0.2);
        let tau = 0.1;
        let ts = TaylorStencil {
            derivatives: [q, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            tau,
            zeta,
            sigma: -1.0,
        };
        let a = q_matrix(q, zeta, -1.0).scale_re(tau);
        let a2 = a * a;
        let series = Mat2::identity()
            + a
            + a2.scale_re(0.5)
            + (a2 * a).scale_re(1.0 / 6.0)
            + (a2 * a2).scale_re(1.0 / 24.0);
        assert!((transition_taylor4(&ts) - series).norm() < 1e-15);
    }

    #[test]
    fn symmetric_taylor_matches_magnus_expansion() {
        // e^{τQ + τ³F₃} truncated at τ⁴, with F₃ from the analytic derivatives.
        let params = ChirpedSechParams::new(4.0, 2.0);
        let ts = TaylorStencil {
            derivatives: params.derivatives(0.45),
            tau: 0.07,
            zeta: c(0.8, 0.1),
            sigma: 1.0,
        };
        let tau = ts.tau;
        let q = q_matrix(ts.derivatives[0], ts.zeta, 1.0);
        let q1 = potential_matrix(ts.derivatives[1], 1.0);
        let q2 = potential_matrix(ts.derivatives[2], 1.0);
        let q_sq = q * q;
        let want = Mat2::identity()
            + q.scale_re(tau)
            + q_sq.scale_re(tau.powi(2) / 2.0)
            + (q_sq * q).scale_re(tau.powi(3) / 6.0)
            + q2.scale_re(tau.powi(3) / 24.0)
            + q1.commutator(&q).scale_re(tau.powi(3) / 12.0)
            + (q_sq * q_sq).scale_re(tau.powi(4) / 24.0)
            + (q * q2 + q2 * q).scale_re(tau.powi(4) / 48.0)
            + (q1 * q_sq - q_sq * q1).scale_re(tau.powi(4) / 24.0);
        assert!((transition_taylor4(&ts) - want).norm() < 1e-14 * want.norm());
    }

    #[test]
    fn off_centre_taylor_expansion_is_fourth_order() {
        // A cell [t − τ/4, t + 3τ/4] expanded at t.
        let params = ChirpedSechParams::new(2.0, 1.0);
        let zeta = c(1.5, 0.0);
        let s = 0.75;
        let gap = |tau: f64| {
            let ts = TaylorStencil {
                derivatives: params.derivatives(0.3),
                tau,
                zeta,
                sigma: 1.0,
            };
            let q = q_matrix(ts.derivatives[0], zeta, 1.0);
            let (t2, t3, t4) = taylor_coefficients(s, &ts);
            let t = Mat2::identity()
                + q.scale_re(tau)
                + t2.scale_re(tau * tau)
                + t3.scale_re(tau.powi(3))
                + t4.scale_re(tau.powi(4));
            let centre = 0.3 + (s - 0.5) * tau;
            (t - micro_step_flow(params, centre, tau, zeta)).norm()
        };
        let ratio = gap(0.2) / gap(0.1);
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn consistency_as_tau_vanishes() {
        let params = ChirpedSechParams::new(5.25, 0.0);
        for scheme in NODE_SCHEMES {
            let gap = |tau: f64| {
                let (st, _) = sech_stencils(params, 0.2, tau, c(1.0, 0.0));
                (any_transition(scheme, &st) - Mat2::identity() - st.q().scale_re(tau)).norm()
            };
            let ratio = gap(0.02) / gap(0.01);
            assert!((3.5..=4.5).contains(&ratio), "{scheme}: {ratio}");
        }
    }

    #[test]
    fn rk4_free_signal_is_identity() {
        let grid = chirped_sech(ChirpedSechParams::new(0.0, 0.0), 1.0, 4, Dispersion::Anomalous).unwrap();
        let u = step_rk4(&grid, c(3.0, 0.0), 2).unwrap();
        assert_eq!(u, Mat2::identity());
        assert!(matches!(
            step_rk4(&grid, c(3.0, 0.0), 7),
            Err(SchemeError::Index { .. })
        ));
    }

    #[test]
    fn rk4_constant_signal_matches_exact_flow() {
        let q = c(1.3, 0.4);
        let zeta = c(0.7, 0.0);
        let gap = |m: usize| {
            let grid = SignalGrid::from_fn(1.0, m, Dispersion::Anomalous, |_| q).unwrap();
            let tau = grid.tau();
            let u = rk4_jost_step(&grid, zeta, 0, false).unwrap();
            let exact = mat_exp(&q_matrix(q, zeta, 1.0).scale_re(2.0 * tau));
            (u - exact).norm()
        };
        let ratio = gap(20) / gap(40);
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk4_envelope_and_jost_forms_agree() {
        let grid = chirped_sech(ChirpedSechParams::new(2.0, 1.0), 3.0, 64, Dispersion::Normal).unwrap();
        let zeta = c(0.9, 0.2);
        let n = 10;
        let env = step_rk4(&grid, zeta, n).unwrap();
        let jost = rk4_jost_step(&grid, zeta, n, false).unwrap();
        let d = |t: f64| Mat2::diag((I * zeta * t).exp(), (-I * zeta * t).exp());
        let t0 = grid.time(n as isize);
        let t2 = grid.time(n as isize + 2);
        let from_env = d(t2).inverse().unwrap() * env * d(t0);
        assert!((from_env - jost).norm() < 1e-13 * jost.norm());
        let back = rk4_jost_step(&grid, zeta, n, true).unwrap();
        let round_trip = back * jost;
        // Forward and backward RK4 are inverse only up to the local error.
        let err = (round_trip - Mat2::identity()).norm();
        assert!(err < 1e-3, "round trip {err:e}");
    }

    #[test]
    fn ct4_derivative_example_matches_finite_difference() {
        let st = stencil([c(1.0, 0.5), c(2.0, -0.2), c(1.5, 0.1)], 0.05, c(0.3, 0.4), -1.0);
        check_derivative(SchemeId::Ct4, st, 1e-6).unwrap();
    }

    fn check_derivative(scheme: SchemeId, st: NodeStencil, tol: f64) -> Result<(), String> {
        let h = 1e-6;
        let at = |z: C64| any_transition(scheme, &NodeStencil { zeta: z, ..st });
        let fd = (at(st.zeta + h) - at(st.zeta - h)).scale_re(1.0 / (2.0 * h));
        let (t, dt) = transition_with_derivative(scheme, &st).unwrap();
        if (t - at(st.zeta)).norm() > 1e-15 * t.norm() {
            return Err(format!("{scheme}: transition mismatch"));
        }
        let err = (dt - fd).norm() / dt.norm();
        if err > tol {
            return Err(format!("{scheme}: derivative relative error {err:e}"));
        }
        Ok(())
    }

    fn arb_c64(scale: f64) -> impl Strategy<Value = C64> {
        (-scale..scale, -scale..scale).prop_map(|(re, im)| C64::new(re, im))
    }

    fn arb_stencil(real_zeta: bool) -> impl Strategy<Value = NodeStencil> {
        (
            arb_c64(6.0),
            arb_c64(0.5),
            arb_c64(0.5),
            0.001f64..0.1,
            arb_c64(20.0),
            prop::bool::ANY,
        )
            .prop_map(move |(q, dm, dp, tau, zeta, anomalous)| NodeStencil {
                q_prev: q + dm,
                q_center: q,
                q_next: q + dp,
                tau,
                zeta: if real_zeta {
                    C64::new(zeta.re, 0.0)
                } else {
                    C64::new(zeta.re, zeta.im.abs() * 0.25)
                },
                sigma: if anomalous { 1.0 } else { -1.0 },
            })
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(st in arb_stencil(false)) {
            for scheme in NODE_SCHEMES {
                if let Err(msg) = check_derivative(scheme, st, 1e-6) {
                    prop_assert!(false, "{}", msg);
                }
            }
        }

        #[test]
        fn quadratic_invariant_is_conserved(st in arb_stencil(true)) {
            let d = if st.sigma > 0.0 { Mat2::identity() } else { Mat2::sigma3() };
            for scheme in NODE_SCHEMES {
                let t = any_transition(scheme, &st);
                let residual = (t.adjoint() * d * t - d).norm();
                prop_assert!(residual <= 1e-12 * t.norm().powi(2).max(1.0), "{} residual {:e}", scheme, residual);
            }
        }
    }
}
