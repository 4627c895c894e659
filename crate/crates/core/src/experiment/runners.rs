use std::time::Instant;

use rayon::prelude::*;

use super::{ExperimentConfig, ExperimentError, ExperimentReport, Row};
use crate::linalg2::C64;
use crate::metrics::{
    continuous_energy, measure_order, min_grid_points, mse, parseval_check, relative_error,
    spectral_interval, uniform_grid, vector_deviation,
};
use crate::oracle::{
    exact_ab, exact_bound_state_b, exact_eigenvalues, exact_energies, exact_jost_vector, exact_residuals,
    OracleSpectrum,
};
use crate::potentials::{chirped_sech, load_signal, ChirpedSechParams, Dispersion, SignalGrid};
use crate::scattering::{a_derivative, b_bidirectional, propagate, scan_continuous, ScatteringResult};
use crate::schemes::SchemeId;

const DEFAULT_XI_RANGE: (f64, f64) = (-20.0, 20.0);
const DEFAULT_N: usize = 1025;
/// Deviations at or below this level are roundoff; no order is reported.
const ORDER_FLOOR: f64 = 1e-13;

/// Spectral label used for rows produced from the closed-form data alone.
pub(crate) const EXACT_LABEL: &str = "EXACT";
/// Label for rows that do not belong to a scheme.
pub(crate) const ALL_LABEL: &str = "ALL";

fn range_grid(config: &ExperimentConfig) -> Vec<f64> {
    let (lo, hi) = config.xi_range.unwrap_or(DEFAULT_XI_RANGE);
    uniform_grid(lo, hi, config.n_points.unwrap_or(DEFAULT_N))
}

/// `[−L_ξ, L_ξ]` with `2M + 1` points unless a range or `N` is given.
fn spectral_grid(config: &ExperimentConfig, signal: &SignalGrid) -> Vec<f64> {
    match config.xi_range {
        Some(_) => range_grid(config),
        None => {
            let l_xi = spectral_interval(signal.tau());
            uniform_grid(-l_xi, l_xi, config.n_points.unwrap_or(2 * signal.m() + 1))
        }
    }
}

fn build_signal(
    config: &ExperimentConfig,
    params: ChirpedSechParams,
    m: usize,
) -> Result<SignalGrid, ExperimentError> {
    Ok(chirped_sech(params, config.half_width(), m, config.dispersion)?)
}

/// Signals to run: the file once, or the chirped secant at every `M`.
fn signals(config: &ExperimentConfig) -> Result<Vec<SignalGrid>, ExperimentError> {
    match &config.signal_file {
        Some(path) => Ok(vec![load_signal(path, config.dispersion)?]),
        None => config
            .m_values()
            .into_iter()
            .map(|m| build_signal(config, config.params(), m))
            .collect(),
    }
}

fn oracle_on(
    xi: &[f64],
    params: ChirpedSechParams,
    dispersion: Dispersion,
) -> Result<Vec<OracleSpectrum>, ExperimentError> {
    xi.par_iter()
        .map(|&x| exact_ab(C64::new(x, 0.0), params, dispersion).map_err(Into::into))
        .collect()
}

/// Time at which the scheme reports `a` and `b`.
fn end_time(signal: &SignalGrid, scheme: SchemeId) -> f64 {
    let l = signal.time(signal.last_node() as isize);
    if scheme == SchemeId::Rk4 {
        l
    } else {
        l - 0.5 * signal.tau()
    }
}

fn computed_jost(r: &ScatteringResult, t: f64) -> [C64; 2] {
    exact_jost_vector(
        &OracleSpectrum {
            zeta: r.zeta,
            a: r.a,
            b: r.b,
        },
        t,
    )
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Accepted window of measured orders for a scheme.
pub fn order_window(scheme: SchemeId) -> (f64, f64) {
    match scheme.order() {
        2 => (1.8, 2.2),
        _ => (3.7, 4.3),
    }
}

/// Convergence order per ξ from the deviation of the final Jost vector on two grids.
pub fn run_order(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let params = config.params();
    let ms = config.m_values();
    let xi = range_grid(config);
    let exact = oracle_on(&xi, params, config.dispersion)?;
    let grids = [
        build_signal(config, params, ms[0])?,
        build_signal(config, params, ms[1])?,
    ];
    let mut report = ExperimentReport::new("xi");
    for &scheme in &config.schemes {
        let mut devs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (g, dev) in grids.iter().zip(devs.iter_mut()) {
            let t_end = end_time(g, scheme);
            *dev = scan_continuous(g, &xi, scheme, config.parallel())
                .iter()
                .zip(&exact)
                .map(|(r, e)| match r {
                    Ok(r) => vector_deviation(computed_jost(r, t_end), exact_jost_vector(e, t_end)),
                    Err(_) => f64::NAN,
                })
                .collect();
        }
        let (lo, hi) = order_window(scheme);
        let mut orders = Vec::with_capacity(xi.len());
        let name = scheme.name();
        for (j, &x) in xi.iter().enumerate() {
            let (d1, d2) = (devs[0][j], devs[1][j]);
            let m = if d1 > ORDER_FLOOR && d2 > ORDER_FLOOR {
                measure_order(d1, d2, grids[0].tau(), grids[1].tau())
                    .map(|o| o.m)
                    .unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            report.push(Row::new(name, Some(ms[0]), Some(x), "deviation_coarse", d1));
            report.push(Row::new(name, Some(ms[1]), Some(x), "deviation_fine", d2));
            report.push(Row::new(name, Some(ms[1]), Some(x), "order", m));
            orders.push(m);
        }
        let defined: Vec<f64> = orders.iter().copied().filter(|m| m.is_finite()).collect();
        let in_window = defined.iter().filter(|m| (lo..=hi).contains(*m)).count();
        report.push(Row::new(
            name,
            Some(ms[1]),
            None,
            "order_median",
            median(&mut defined.clone()),
        ));
        report.push(Row::new(
            name,
            Some(ms[1]),
            None,
            "order_in_window_fraction",
            in_window as f64 / xi.len() as f64,
        ));
        report.push(Row::new(
            name,
            Some(ms[1]),
            None,
            "order_undefined_points",
            (xi.len() - defined.len()) as f64,
        ));
    }
    Ok(report)
}

/// MSE of `a` and `b` per scheme and grid size, with timing.
pub fn run_scan(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let xi = range_grid(config);
    let mut report = ExperimentReport::new("xi");
    let signals = signals(config)?;
    let exact = match config.signal_file {
        Some(_) => None,
        None => Some(oracle_on(&xi, config.params(), config.dispersion)?),
    };
    for &scheme in &config.schemes {
        for signal in &signals {
            let m = Some(signal.m());
            let start = Instant::now();
            let results = scan_continuous(signal, &xi, scheme, config.parallel());
            let elapsed = start.elapsed().as_secs_f64();
            let name = scheme.name();
            let failed = results.iter().filter(|r| r.is_err()).count();
            match &exact {
                None => {
                    for (r, &x) in results.iter().zip(&xi) {
                        let (a, b) = r
                            .as_ref()
                            .map(|r| (r.a, r.b))
                            .unwrap_or((C64::new(f64::NAN, f64::NAN), C64::new(f64::NAN, f64::NAN)));
                        for (metric, v) in [("a_re", a.re), ("a_im", a.im), ("b_re", b.re), ("b_im", b.im)] {
                            report.push(Row::new(name, m, Some(x), metric, v));
                        }
                    }
                }
                Some(exact) => {
                    let ok: Vec<(&ScatteringResult, &OracleSpectrum)> = results
                        .iter()
                        .zip(exact)
                        .filter_map(|(r, e)| r.as_ref().ok().map(|r| (r, e)))
                        .collect();
                    let (ca, ea): (Vec<C64>, Vec<C64>) = ok.iter().map(|(r, e)| (r.a, e.a)).unzip();
                    let (cb, eb): (Vec<C64>, Vec<C64>) = ok.iter().map(|(r, e)| (r.b, e.b)).unzip();
                    report.push(Row::new(
                        name,
                        m,
                        None,
                        "mse_a",
                        mse(&ca, &ea).unwrap_or(f64::NAN),
                    ));
                    report.push(Row::new(
                        name,
                        m,
                        None,
                        "mse_b",
                        mse(&cb, &eb).unwrap_or(f64::NAN),
                    ));
                }
            }
            if failed > 0 {
                report.push(Row::new(name, m, None, "failed_points", failed as f64));
            }
            report.push(Row::new(
                name,
                m,
                None,
                "wall_clock_s",
                elapsed.max(f64::MIN_POSITIVE),
            ));
        }
    }
    let xi_max = xi.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let q_max = signals.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
    let l = signals
        .first()
        .map(|s| s.half_width())
        .unwrap_or(config.half_width());
    report.push(Row::new(
        ALL_LABEL,
        None,
        None,
        "m_min",
        min_grid_points(l, xi_max, q_max) as f64,
    ));
    Ok(report)
}

/// Conservation of `|a|² + σ|b|²` and the continuous-spectrum energy.
pub fn run_energy(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport::new("xi");
    let sigma = config.dispersion.sign();
    let exact_e_c = match (&config.signal_file, config.dispersion) {
        (None, Dispersion::Anomalous) => exact_energies(config.params(), config.dispersion)?.continuous,
        _ => None,
    };
    let signals = signals(config)?;
    for &scheme in &config.schemes {
        for signal in &signals {
            let xi = spectral_grid(config, signal);
            let m = Some(signal.m());
            let name = scheme.name();
            let results = scan_continuous(signal, &xi, scheme, config.parallel());
            let mut max_dev = 0.0f64;
            let mut max_rel = 0.0f64;
            let mut a_values = Vec::with_capacity(xi.len());
            for (r, &x) in results.iter().zip(&xi) {
                let (dev, a) = match r {
                    Ok(r) => ((r.invariant(sigma) - 1.0).abs(), r.a),
                    Err(_) => (f64::NAN, C64::new(f64::NAN, f64::NAN)),
                };
                max_dev = max_dev.max(dev);
                max_rel = max_rel.max(dev / a.norm_sqr().max(1.0));
                a_values.push(a);
                report.push(Row::new(name, m, Some(x), "h_deviation", dev));
            }
            report.push(Row::new(name, m, None, "max_h_deviation", max_dev));
            report.push(Row::new(name, m, None, "max_h_deviation_relative", max_rel));
            if xi.len() >= 2 {
                let e_c = continuous_energy(&a_values, &xi)?;
                report.push(Row::new(name, m, None, "e_c_numeric", e_c));
                if let Some(exact) = exact_e_c {
                    report.push(Row::new(name, m, None, "e_c_exact", exact));
                    report.push(Row::new(
                        name,
                        m,
                        None,
                        "e_c_error",
                        relative_error(C64::new(e_c, 0.0), C64::new(exact, 0.0)),
                    ));
                }
            }
        }
    }
    Ok(report)
}

/// Errors of `a(ζ₀)`, `b(ζ₀)` and `r₀` at the largest eigenvalue, per amplitude.
pub fn run_discrete(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    struct Target {
        amplitude: f64,
        zeta: C64,
        b: C64,
        r: C64,
    }
    let mut targets = Vec::with_capacity(config.amplitudes.len());
    for &amplitude in &config.amplitudes {
        let params = ChirpedSechParams::new(amplitude, config.chirp);
        let zeta = *exact_eigenvalues(params)
            .first()
            .ok_or(ExperimentError::NoDiscreteSpectrum {
                amplitude,
                chirp: config.chirp,
            })?;
        targets.push(Target {
            amplitude,
            zeta,
            b: exact_bound_state_b(params, 0)?,
            r: exact_residuals(params)?[0],
        });
    }
    let mut report = ExperimentReport::new("A");
    for &scheme in &config.schemes {
        for m in config.m_values() {
            let name = scheme.name();
            let one = |t: &Target| -> Result<[f64; 3], ExperimentError> {
                let signal = build_signal(config, ChirpedSechParams::new(t.amplitude, config.chirp), m)?;
                let point = || -> Result<[f64; 3], crate::scattering::ScatteringError> {
                    let a = propagate(&signal, t.zeta, scheme, false)?.a;
                    let b = b_bidirectional(&signal, t.zeta, scheme)?;
                    let da = a_derivative(&signal, t.zeta, scheme)?;
                    Ok([a.norm(), relative_error(b, t.b), relative_error(b / da, t.r)])
                };
                Ok(point().unwrap_or([f64::NAN; 3]))
            };
            let values: Vec<[f64; 3]> = if config.parallel() {
                targets.par_iter().map(one).collect::<Result<_, _>>()?
            } else {
                targets.iter().map(one).collect::<Result<_, _>>()?
            };
            for (t, v) in targets.iter().zip(values) {
                for (metric, value) in ["abs_a0", "error_b0", "error_r0"].into_iter().zip(v) {
                    report.push(Row::new(name, Some(m), Some(t.amplitude), metric, value));
                }
            }
        }
    }
    Ok(report)
}

/// Numeric `E_c`, closed-form `E_d` and the Parseval residual against `∫|q|²`.
pub fn run_parseval(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let params = config.params();
    let eigenvalues = exact_eigenvalues(params);
    let energies = exact_energies(params, Dispersion::Anomalous)?;
    let e_c_exact = energies.continuous.expect("closed form for sigma = 1");
    let mut report = ExperimentReport::new("xi");
    let push_set = |report: &mut ExperimentReport, name: &str, signal: &SignalGrid, e_c: f64| {
        let m = Some(signal.m());
        let residual = parseval_check(signal, e_c, &eigenvalues)?;
        report.push(Row::new(name, m, None, "e_c_numeric", e_c));
        report.push(Row::new(name, m, None, "e_c_exact", e_c_exact));
        report.push(Row::new(name, m, None, "e_d_exact", energies.discrete));
        report.push(Row::new(name, m, None, "parseval_residual", residual));
        Ok::<_, ExperimentError>(())
    };
    let signals = signals(config)?;
    for signal in &signals {
        let xi = spectral_grid(config, signal);
        let exact: Vec<C64> = oracle_on(&xi, params, Dispersion::Anomalous)?
            .iter()
            .map(|s| s.a)
            .collect();
        push_set(&mut report, EXACT_LABEL, signal, continuous_energy(&exact, &xi)?)?;
    }
    for &scheme in &config.schemes {
        for signal in &signals {
            let xi = spectral_grid(config, signal);
            let a: Vec<C64> = scan_continuous(signal, &xi, scheme, config.parallel())
                .into_iter()
                .map(|r| r.map(|r| r.a).unwrap_or(C64::new(f64::NAN, f64::NAN)))
                .collect();
            push_set(&mut report, scheme.name(), signal, continuous_energy(&a, &xi)?)?;
        }
    }
    Ok(report)
}
