//! Experiment configuration and runners behind the command-line tool.

mod report;
mod runners;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{ExperimentReport, Row, TIMING_METRICS};
pub use runners::{run_discrete, run_energy, run_order, run_parseval, run_scan};

use crate::potentials::{ChirpedSechParams, Dispersion};
use crate::schemes::SchemeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Scan,
    Order,
    Energy,
    Discrete,
    Parseval,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Scan => "scan",
            Command::Order => "order",
            Command::Energy => "energy",
            Command::Discrete => "discrete",
            Command::Parseval => "parseval",
        }
    }

    pub fn default_half_width(self) -> f64 {
        match self {
            Command::Discrete => 20.0,
            _ => 30.0,
        }
    }

    pub fn default_m_values(self) -> Vec<usize> {
        match self {
            Command::Order => vec![1 << 10, 1 << 11],
            Command::Scan => vec![1 << 9, 1 << 10, 1 << 11, 1 << 12],
            Command::Energy | Command::Parseval => vec![1 << 12],
            Command::Discrete => vec![1 << 11],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scan" => Ok(Command::Scan),
            "order" => Ok(Command::Order),
            "energy" => Ok(Command::Energy),
            "discrete" => Ok(Command::Discrete),
            "parseval" => Ok(Command::Parseval),
            _ => Err(format!("unknown command {s:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no discrete spectrum for A = {amplitude}, C = {chirp}")]
    NoDiscreteSpectrum { amplitude: f64, chirp: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("output error: {0}")]
    Io(String),
}

impl ExperimentError {
    /// Process exit code: 2 for configuration problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::NoDiscreteSpectrum { .. } => 2,
            ExperimentError::Numeric(_) | ExperimentError::Io(_) => 3,
        }
    }
}

macro_rules! numeric_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ExperimentError {
            fn from(e: $t) -> Self {
                ExperimentError::Numeric(e.to_string())
            }
        }
    )*};
}

numeric_from!(
    crate::scattering::ScatteringError,
    crate::oracle::OracleError,
    crate::metrics::MetricsError,
    crate::schemes::SchemeError
);

impl From<crate::potentials::SignalError> for ExperimentError {
    fn from(e: crate::potentials::SignalError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}

/// Everything a runner needs. Optional fields fall back to per-command defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub amplitudes: Vec<f64>,
    pub chirp: f64,
    pub signal_file: Option<PathBuf>,
    pub dispersion: Dispersion,
    pub half_width: Option<f64>,
    pub m_values: Option<Vec<usize>>,
    pub schemes: Vec<SchemeId>,
    pub xi_range: Option<(f64, f64)>,
    pub n_points: Option<usize>,
    /// `None` uses every hardware thread.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults for `command` with the `A = 5.25, C = 0, σ = 1` test signal.
    pub fn new(command: Command) -> Self {
        Self {
            command,
            amplitudes: vec![5.25],
            chirp: 0.0,
            signal_file: None,
            dispersion: Dispersion::Anomalous,
            half_width: None,
            m_values: None,
            schemes: SchemeId::PRODUCTION.to_vec(),
            xi_range: None,
            n_points: None,
            threads: None,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
            .unwrap_or_else(|| self.command.default_half_width())
    }

    pub fn m_values(&self) -> Vec<usize> {
        self.m_values
            .clone()
            .unwrap_or_else(|| self.command.default_m_values())
    }

    /// The single chirped-secant parameter set (first amplitude).
    pub fn params(&self) -> ChirpedSechParams {
        ChirpedSechParams::new(self.amplitudes[0], self.chirp)
    }

    pub fn parallel(&self) -> bool {
        self.threads != Some(1)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let cfg = |m: String| Err(ExperimentError::Config(m));
        if self.schemes.is_empty() {
            return cfg("at least one scheme is required".into());
        }
        if let Some(s) = self.schemes.iter().find(|s| !SchemeId::PRODUCTION.contains(s)) {
            return cfg(format!("{s} is a test oracle, not a production scheme"));
        }
        if self.amplitudes.is_empty() || self.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return cfg(format!(
                "amplitudes must be finite and non-negative, got {:?}",
                self.amplitudes
            ));
        }
        if !self.chirp.is_finite() {
            return cfg("chirp must be finite".into());
        }
        if self.amplitudes.len() > 1 && self.command != Command::Discrete {
            return cfg("an amplitude sweep is only supported by the discrete command".into());
        }
        let l = self.half_width();
        if !(l > 0.0 && l.is_finite()) {
            return cfg(format!("L must be positive, got {l}"));
        }
        let ms = self.m_values();
        if ms.is_empty() || ms.contains(&0) {
            return cfg("M values must be positive and non-empty".into());
        }
        if ms.windows(2).any(|w| w[1] <= w[0]) {
            return cfg(format!("M values must be strictly increasing, got {ms:?}"));
        }
        if self.command == Command::Order && ms.len() != 2 {
            return cfg(format!("order needs exactly two M values, got {}", ms.len()));
        }
        if let Some((lo, hi)) = self.xi_range {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return cfg(format!("invalid xi range [{lo}, {hi}]"));
            }
        }
        if self.n_points == Some(0) {
            return cfg("N must be at least 1".into());
        }
        if matches!(self.command, Command::Energy | Command::Parseval) && self.n_points == Some(1) {
            return cfg("energy quadrature needs N >= 2".into());
        }
        if self.threads == Some(0) {
            return cfg("threads must be at least 1".into());
        }
        let needs_oracle = matches!(
            self.command,
            Command::Order | Command::Discrete | Command::Parseval
        );
        if self.signal_file.is_some() && needs_oracle {
            return cfg(format!(
                "{} compares against closed-form data and needs the chirped secant",
                self.command
            ));
        }
        let anomalous_only = matches!(self.command, Command::Discrete | Command::Parseval);
        if anomalous_only && self.dispersion != Dispersion::Anomalous {
            return cfg(format!("{} is defined for sigma = 1 only", self.command));
        }
        Ok(())
    }
}

/// Validates the configuration and runs the command on a thread pool of the
/// requested size.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match config.command {
        Command::Scan => run_scan(config),
        Command::Order => run_order(config),
        Command::Energy => run_energy(config),
        Command::Discrete => run_discrete(config),
        Command::Parseval => run_parseval(config),
    })
}
