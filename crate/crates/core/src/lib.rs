//! Direct scattering for the Zakharov-Shabat problem.
//!
//! One-step transition schemes (BO, ES4, TES4, CT4, RK4) propagate Jost
//! solutions through a sampled potential to produce `a(ζ)`, `b(ζ)`, `a′(ζ)`
//! and the phase coefficients `r_k`. Closed-form spectral data for the chirped
//! hyperbolic secant serve as reference values.

pub mod experiment;
pub mod linalg2;
pub mod metrics;
pub mod oracle;
pub mod potentials;
pub mod scattering;
pub mod schemes;

pub use experiment::{run_experiment, Command, ExperimentConfig, ExperimentError, ExperimentReport, Row};
pub use linalg2::{
    exp_derivative, exp_zeta_derivative, mat_exp, pauli_decompose, Mat2, PauliCoefficients, C64,
};
pub use metrics::{mse, parseval_check, relative_error, vector_deviation, MetricsError};
pub use oracle::{exact_ab, exact_discrete_spectrum, exact_eigenvalues, OracleError, OracleSpectrum};
pub use potentials::{
    chirped_sech, load_signal, q_matrix, read_signal, ChirpedSechParams, Dispersion, SignalError, SignalGrid,
};
pub use scattering::{
    a_derivative, b_bidirectional, propagate, propagate_with_derivative, residual, scan_continuous,
    ScatteringError, ScatteringResult,
};
pub use schemes::{SchemeError, SchemeId};
