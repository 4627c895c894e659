//! Shared fixtures for the benchmarks.

use zs_core::schemes::NodeStencil;
use zs_core::{chirped_sech, ChirpedSechParams, Dispersion, SignalGrid, C64};

pub const SOLITON: ChirpedSechParams = ChirpedSechParams::new(5.25, 0.0);
pub const CHIRPED: ChirpedSechParams = ChirpedSechParams::new(5.2, 4.0);

/// The chirped secant on `[-30, 30]` with `2m + 1` samples.
pub fn signal(params: ChirpedSechParams, m: usize) -> SignalGrid {
    chirped_sech(params, 30.0, m, Dispersion::Anomalous).expect("valid grid")
}

/// A stencil near the peak of the chirped signal.
pub fn stencil(zeta: C64) -> NodeStencil {
    NodeStencil::from_grid(&signal(CHIRPED, 1024), 1030, zeta)
}

/// `n` evenly spaced real spectral points on `[-20, 20]`.
pub fn xi_grid(n: usize) -> Vec<f64> {
    zs_core::metrics::uniform_grid(-20.0, 20.0, n)
}
