//! Uniform-grid potentials and the Zakharov-Shabat system matrix.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg2::{Mat2, C64, I, ZERO};

/// Sign σ of the dispersion term; selects the focusing (σ = 1) or defocusing
/// (σ = −1) Zakharov-Shabat problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dispersion {
    /// σ = 1, the case with a discrete spectrum.
    Anomalous,
    /// σ = −1.
    Normal,
}

impl Dispersion {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Dispersion::Anomalous => 1.0,
            Dispersion::Normal => -1.0,
        }
    }

    pub fn from_sign(sigma: i32) -> Option<Self> {
        match sigma {
            1 => Some(Dispersion::Anomalous),
            -1 => Some(Dispersion::Normal),
            _ => None,
        }
    }
}

impl fmt::Display for Dispersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dispersion::Anomalous => f.write_str("1"),
            Dispersion::Normal => f.write_str("-1"),
        }
    }
}

impl FromStr for Dispersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" | "+1" | "anomalous" => Ok(Dispersion::Anomalous),
            "-1" | "normal" => Ok(Dispersion::Normal),
            other => Err(format!("sigma must be 1 or -1, got {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed signal row {row}: {reason}")]
    Parse { row: usize, reason: String },
    #[error("time grid is not uniform: max |dt - tau| = {max_deviation:e} for tau = {tau:e}")]
    NonUniformGrid { tau: f64, max_deviation: f64 },
    #[error("signal needs an odd number (>= 3) of samples, got {0}")]
    EvenSampleCount(usize),
    #[error("time grid must be centred on t = 0, got [{first}, {last}]")]
    OffCenterGrid { first: f64, last: f64 },
    #[error("invalid grid parameters: {0}")]
    InvalidGrid(String),
}

/// Samples `q_n` of a potential on the uniform grid `t_n = −L + τn`, `n = 0..=2M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalGrid {
    samples: Vec<C64>,
    half_width: f64,
    m: usize,
    tau: f64,
    dispersion: Dispersion,
}

impl SignalGrid {
    /// Wraps `2M + 1` samples covering `[−L, L]`.
    pub fn new(samples: Vec<C64>, half_width: f64, dispersion: Dispersion) -> Result<Self, SignalError> {
        let n = samples.len();
        if n < 3 || n.is_multiple_of(2) {
            return Err(SignalError::EvenSampleCount(n));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(SignalError::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let m = (n - 1) / 2;
        Ok(Self {
            samples,
            half_width,
            m,
            tau: half_width / m as f64,
            dispersion,
        })
    }

    /// Samples a closure at every grid node.
    pub fn from_fn(
        half_width: f64,
        m: usize,
        dispersion: Dispersion,
        q: impl Fn(f64) -> C64,
    ) -> Result<Self, SignalError> {
        if m == 0 {
            return Err(SignalError::InvalidGrid("M must be at least 1".into()));
        }
        let samples = (0..=2 * m).map(|n| q(node_time(half_width, m, n))).collect();
        Self::new(samples, half_width, dispersion)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// Half-width `L` of the interval.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `M`, half the number of grid steps.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    pub fn sigma(&self) -> f64 {
        self.dispersion.sign()
    }

    /// Index of the last node, `2M`.
    pub fn last_node(&self) -> usize {
        2 * self.m
    }

    /// Time of node `n`; `t_0 = −L` and `t_{2M} = L` exactly.
    #[inline]
    pub fn time(&self, n: isize) -> f64 {
        node_time_signed(self.half_width, self.m, n)
    }

    /// `q_n`, zero outside `0..=2M` where the potential is taken to have decayed.
    #[inline]
    pub fn q(&self, n: isize) -> C64 {
        if n < 0 {
            return ZERO;
        }
        self.samples.get(n as usize).copied().unwrap_or(ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    /// Trapezoid quadrature of `|q|²` over the grid.
    pub fn energy(&self) -> f64 {
        let n = self.samples.len();
        let interior: f64 = self.samples[1..n - 1].iter().map(|q| q.norm_sqr()).sum();
        self.tau * (interior + 0.5 * (self.samples[0].norm_sqr() + self.samples[n - 1].norm_sqr()))
    }

    /// Writes the `t,re,im` CSV format with 17 significant digits.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SignalError> {
        let path = path.as_ref();
        let io_err = |source| SignalError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        self.write_csv(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "t,re,im")?;
        for (n, q) in self.samples.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.time(n as isize), q.re, q.im)?;
        }
        Ok(())
    }
}

#[inline]
fn node_time_signed(half_width: f64, m: usize, n: isize) -> f64 {
    half_width * ((n - m as isize) as f64 / m as f64)
}

#[inline]
fn node_time(half_width: f64, m: usize, n: usize) -> f64 {
    node_time_signed(half_width, m, n as isize)
}

/// Reads a `t,re,im` CSV signal; the grid must be uniform, centred on zero and
/// have an odd number of rows.
pub fn load_signal(path: impl AsRef<Path>, dispersion: Dispersion) -> Result<SignalGrid, SignalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SignalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_signal(file, dispersion)
}

pub fn read_signal(reader: impl std::io::Read, dispersion: Dispersion) -> Result<SignalGrid, SignalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| SignalError::Parse {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != 3 {
            return Err(SignalError::Parse {
                row,
                reason: format!("expected 3 columns, got {}", record.len()),
            });
        }
        let field = |i: usize| -> Result<f64, SignalError> {
            record[i].parse::<f64>().map_err(|e| SignalError::Parse {
                row,
                reason: format!("column {}: {e}", i + 1),
            })
        };
        times.push(field(0)?);
        samples.push(C64::new(field(1)?, field(2)?));
    }
    let n = samples.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(SignalError::EvenSampleCount(n));
    }
    let (first, last) = (times[0], times[n - 1]);
    let tau = (last - first) / (n - 1) as f64;
    if tau.is_nan() || tau <= 0.0 {
        return Err(SignalError::NonUniformGrid {
            tau,
            max_deviation: f64::INFINITY,
        });
    }
    let max_deviation = times
        .windows(2)
        .map(|w| ((w[1] - w[0]) - tau).abs())
        .fold(0.0, f64::max);
    if max_deviation > 1e-9 * tau {
        return Err(SignalError::NonUniformGrid { tau, max_deviation });
    }
    if (first + last).abs() > 1e-9 * tau {
        return Err(SignalError::OffCenterGrid { first, last });
    }
    SignalGrid::new(samples, 0.5 * (last - first), dispersion)
}

/// Parameters of the chirped hyperbolic secant `q(t) = A·sech(t)^{1 + iC}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpedSechParams {
    pub amplitude: f64,
    pub chirp: f64,
}

impl ChirpedSechParams {
    pub const fn new(amplitude: f64, chirp: f64) -> Self {
        Self { amplitude, chirp }
    }

    /// `q(t)`, evaluated as `A·sech(t)·exp(iC·ln sech t)`.
    pub fn value(&self, t: f64) -> C64 {
        let sech = sech(t);
        if self.chirp == 0.0 {
            return C64::new(self.amplitude * sech, 0.0);
        }
        C64::from_polar(self.amplitude * sech, self.chirp * ln_sech(t))
    }

    /// `(q, q′, q″, q‴)` at `t`, from `q = A·e^{p·g}` with `p = 1 + iC`, `g = ln sech t`.
    pub fn derivatives(&self, t: f64) -> [C64; 4] {
        let q = self.value(t);
        let p = C64::new(1.0, self.chirp);
        let th = t.tanh();
        let s2 = sech(t).powi(2);
        let g1 = -th;
        let g2 = -s2;
        let g3 = 2.0 * s2 * th;
        let d1 = p * g1 * q;
        let d2 = (p * g2 + p * p * (g1 * g1)) * q;
        let d3 = (p * g3 + p * p * (3.0 * g1 * g2) + p * p * p * (g1 * g1 * g1)) * q;
        [q, d1, d2, d3]
    }
}

/// `sech t = 2e^{−|t|} / (1 + e^{−2|t|})`, finite for any |t|.
pub fn sech(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

fn ln_sech(t: f64) -> f64 {
    let a = t.abs();
    std::f64::consts::LN_2 - a - (-2.0 * a).exp().ln_1p()
}

/// Samples the chirped secant on the grid `t_n = −L + nL/M`.
pub fn chirped_sech(
    params: ChirpedSechParams,
    half_width: f64,
    m: usize,
    dispersion: Dispersion,
) -> Result<SignalGrid, SignalError> {
    if params.amplitude < 0.0 {
        return Err(SignalError::InvalidGrid(format!(
            "amplitude must be non-negative, got {}",
            params.amplitude
        )));
    }
    SignalGrid::from_fn(half_width, m, dispersion, |t| params.value(t))
}

/// The system matrix `Q = [[−iζ, q], [−σq*, iζ]]`.
#[inline]
pub fn q_matrix(q: C64, zeta: C64, sigma: f64) -> Mat2 {
    Mat2::new(-I * zeta, q, -sigma * q.conj(), I * zeta)
}

/// The ζ-free off-diagonal part `[[0, q], [−σq*, 0]]` of `Q`.
#[inline]
pub fn potential_matrix(q: C64, sigma: f64) -> Mat2 {
    Mat2::new(ZERO, q, -sigma * q.conj(), ZERO)
}
