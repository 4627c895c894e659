//! Command-line and config-file parsing into an [`ExperimentConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use zs_core::{Command, Dispersion, ExperimentConfig, SchemeId};

#[derive(Debug, Parser)]
#[command(
    name = "zs-scatter",
    version,
    about = "Direct Zakharov-Shabat scattering experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// MSE of a(ξ) and b(ξ) against the closed form, per scheme and grid size.
    Scan(Options),
    /// Convergence order per ξ from two grids.
    Order(Options),
    /// Conservation of |a|² + σ|b|² and the continuous-spectrum energy.
    Energy(Options),
    /// Errors of a, b and the phase coefficient at the largest eigenvalue.
    Discrete(Options),
    /// Nonlinear Parseval residual.
    Parseval(Options),
}

impl Sub {
    pub fn split(self) -> (Command, Options) {
        match self {
            Sub::Scan(o) => (Command::Scan, o),
            Sub::Order(o) => (Command::Order, o),
            Sub::Energy(o) => (Command::Energy, o),
            Sub::Discrete(o) => (Command::Discrete, o),
            Sub::Parseval(o) => (Command::Parseval, o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Every option is optional so that a config file can supply it; flags win.
#[derive(Debug, Default, Clone, Args)]
pub struct Options {
    /// Amplitude: a value, a comma list, or start:stop:step (discrete only sweeps).
    #[arg(long = "A", value_name = "A")]
    pub amplitude: Option<String>,
    /// Chirp C.
    #[arg(long = "C", value_name = "C", allow_negative_numbers = true)]
    pub chirp: Option<f64>,
    /// Dispersion sign: 1 (anomalous) or -1 (normal).
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<String>,
    /// Half-width L of the time window.
    #[arg(long = "L", value_name = "L")]
    pub half_width: Option<f64>,
    /// Grid sizes: comma list of integers or 2^k, or 2^a:2^b for every power in between.
    #[arg(long = "M", value_name = "M")]
    pub m: Option<String>,
    /// Comma list of BO, ES4, TES4, CT4, RK4, or "all".
    #[arg(long)]
    pub schemes: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub xi_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xi_max: Option<f64>,
    /// Number of ξ points.
    #[arg(long = "N", value_name = "N")]
    pub n: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads, or "auto".
    #[arg(long)]
    pub threads: Option<String>,
    /// Potential samples as CSV with columns t,re,im.
    #[arg(long)]
    pub signal_file: Option<PathBuf>,
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub experiment: ExperimentConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Options {
    /// Fills unset fields from `other`.
    fn or(self, other: Options) -> Options {
        Options {
            amplitude: self.amplitude.or(other.amplitude),
            chirp: self.chirp.or(other.chirp),
            sigma: self.sigma.or(other.sigma),
            half_width: self.half_width.or(other.half_width),
            m: self.m.or(other.m),
            schemes: self.schemes.or(other.schemes),
            xi_min: self.xi_min.or(other.xi_min),
            xi_max: self.xi_max.or(other.xi_max),
            n: self.n.or(other.n),
            out: self.out.or(other.out),
            format: self.format.or(other.format),
            threads: self.threads.or(other.threads),
            signal_file: self.signal_file.or(other.signal_file),
            config: self.config,
        }
    }

    pub fn resolve(self, command: Command) -> Result<Invocation, String> {
        let opts = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                let file = parse_config_file(&text, path.parent().unwrap_or(Path::new(".")))?;
                self.or(file)
            }
            None => self,
        };
        let mut cfg = ExperimentConfig::new(command);
        if let Some(a) = &opts.amplitude {
            cfg.amplitudes = parse_amplitudes(a)?;
        }
        if let Some(c) = opts.chirp {
            cfg.chirp = c;
        }
        if let Some(s) = &opts.sigma {
            cfg.dispersion = s.parse::<Dispersion>().map_err(|e| format!("--sigma: {e}"))?;
        }
        cfg.half_width = opts.half_width;
        cfg.m_values = opts.m.as_deref().map(parse_m_values).transpose()?;
        if let Some(s) = &opts.schemes {
            cfg.schemes = parse_schemes(s)?;
        }
        cfg.xi_range = match (opts.xi_min, opts.xi_max) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(-20.0), hi.unwrap_or(20.0))),
        };
        cfg.n_points = opts.n;
        cfg.threads = match opts.threads.as_deref() {
            None | Some("auto") => None,
            Some(t) => Some(
                t.parse()
                    .map_err(|_| format!("--threads expects an integer or \"auto\", got {t:?}"))?,
            ),
        };
        cfg.signal_file = opts.signal_file;
        let format = opts.format.unwrap_or_else(|| match &opts.out {
            Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => Format::Json,
            _ => Format::Csv,
        });
        Ok(Invocation {
            experiment: cfg,
            out: opts.out,
            format,
        })
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("not a number: {s:?}"))
}

/// `5.25`, `3.25,5.25,7.25` or `1:8:0.25` (inclusive).
pub fn parse_amplitudes(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [_] => s.split(',').map(parse_number).collect(),
        [start, stop, step] => {
            let (start, stop, step) = (parse_number(start)?, parse_number(stop)?, parse_number(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(format!("invalid amplitude range {s:?}"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| start + k as f64 * step).collect())
        }
        _ => Err(format!("amplitude range must be start:stop:step, got {s:?}")),
    }
}

fn parse_size(s: &str) -> Result<usize, String> {
    let s = s.trim();
    match s.split_once('^') {
        Some(("2", k)) => match k.parse::<u32>() {
            Ok(k) if k < usize::BITS => Ok(1usize << k),
            _ => Err(format!("invalid power of two {s:?}")),
        },
        Some(_) => Err(format!("only powers of two are supported, got {s:?}")),
        None => s.parse().map_err(|_| format!("not a grid size: {s:?}")),
    }
}

/// `1024,2048`, `2^10,2^11` or `2^9:2^14`.
pub fn parse_m_values(s: &str) -> Result<Vec<usize>, String> {
    if let Some((lo, hi)) = s.split_once(':') {
        let (lo, hi) = (parse_size(lo)?, parse_size(hi)?);
        if !lo.is_power_of_two() || !hi.is_power_of_two() || hi < lo {
            return Err(format!(
                "M range needs powers of two in increasing order, got {s:?}"
            ));
        }
        return Ok((lo.trailing_zeros()..=hi.trailing_zeros())
            .map(|k| 1usize << k)
            .collect());
    }
    s.split(',').map(parse_size).collect()
}

pub fn parse_schemes(s: &str) -> Result<Vec<SchemeId>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(SchemeId::PRODUCTION.to_vec());
    }
    s.split(',')
        .map(|p| p.trim().parse::<SchemeId>().map_err(|e| e.to_string()))
        .collect()
}

/// Reads a TOML table whose keys mirror the long flags (`xi-min` or `xi_min`).
/// Relative paths are taken relative to the file's directory.
pub fn parse_config_file(text: &str, base: &Path) -> Result<Options, String> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| format!("config file: {}", e.message()))?;
    let mut o = Options::default();
    for (key, value) in &table {
        let as_text = || -> Result<String, String> {
            Ok(match value {
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Array(items) => items
                    .iter()
                    .map(|v| match v {
                        toml::Value::String(s) => Ok(s.clone()),
                        toml::Value::Integer(i) => Ok(i.to_string()),
                        toml::Value::Float(f) => Ok(f.to_string()),
                        _ => Err(format!("config key {key}: unsupported list item {v}")),
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .join(","),
                _ => return Err(format!("config key {key}: unsupported value {value}")),
            })
        };
        let number = || {
            as_text()
                .and_then(|s| parse_number(&s))
                .map_err(|e| format!("config key {key}: {e}"))
        };
        let path = || as_text().map(|s| base.join(s));
        match key.replace('-', "_").as_str() {
            "A" => o.amplitude = Some(as_text()?),
            "C" => o.chirp = Some(number()?),
            "sigma" => o.sigma = Some(as_text()?),
            "L" => o.half_width = Some(number()?),
            "M" => o.m = Some(as_text()?),
            "schemes" => o.schemes = Some(as_text()?),
            "xi_min" => o.xi_min = Some(number()?),
            "xi_max" => o.xi_max = Some(number()?),
            "N" => {
                let s = as_text()?;
                o.n = Some(
                    s.parse()
                        .map_err(|_| format!("config key N: not a count: {s:?}"))?,
                )
            }
            "out" => o.out = Some(path()?),
            "format" => {
                let s = as_text()?;
                o.format = Some(Format::from_str(&s, true).map_err(|_| format!("config key format: {s:?}"))?)
            }
            "threads" => o.threads = Some(as_text()?),
            "signal_file" => o.signal_file = Some(path()?),
            _ => return Err(format!("unknown config key {key:?}")),
        }
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(args: &[&str]) -> Result<Invocation, String> {
        let cli = Cli::try_parse_from(std::iter::once("zs-scatter").chain(args.iter().copied()))
            .map_err(|e| e.to_string())?;
        let (command, opts) = cli.command.split();
        opts.resolve(command)
    }

    #[test]
    fn amplitude_forms() {
        assert_eq!(parse_amplitudes("5.25").unwrap(), vec![5.25]);
        assert_eq!(parse_amplitudes("3.25,5.25").unwrap(), vec![3.25, 5.25]);
        let sweep = parse_amplitudes("1:8:0.25").unwrap();
        assert_eq!(sweep.len(), 29);
        assert_eq!(*sweep.last().unwrap(), 8.0);
        assert!(parse_amplitudes("1:8").is_err());
        assert!(parse_amplitudes("8:1:0.5").is_err());
    }

    #[test]
    fn grid_size_forms() {
        assert_eq!(parse_m_values("1024,2^11").unwrap(), vec![1024, 2048]);
        assert_eq!(parse_m_values("2^9:2^12").unwrap(), vec![512, 1024, 2048, 4096]);
        assert!(parse_m_values("3^2").is_err());
        assert!(parse_m_values("2^12:2^9").is_err());
    }

    #[test]
    fn flags_map_onto_the_config() {
        let inv = resolve(&[
            "energy",
            "--A",
            "5.2",
            "--C",
            "4",
            "--sigma",
            "-1",
            "--M",
            "2^12",
            "--schemes",
            "es4,rk4",
            "--xi-min",
            "-5",
            "--N",
            "11",
            "--threads",
            "1",
            "--out",
            "r.json",
        ])
        .unwrap();
        let e = &inv.experiment;
        assert_eq!(e.command, Command::Energy);
        assert_eq!((e.amplitudes.clone(), e.chirp), (vec![5.2], 4.0));
        assert_eq!(e.dispersion, Dispersion::Normal);
        assert_eq!(e.m_values, Some(vec![4096]));
        assert_eq!(e.schemes, vec![SchemeId::Es4, SchemeId::Rk4]);
        assert_eq!(e.xi_range, Some((-5.0, 20.0)));
        assert_eq!((e.n_points, e.threads), (Some(11), Some(1)));
        assert_eq!(inv.format, Format::Json);
    }

    #[test]
    fn defaults_are_left_to_the_runner() {
        let inv = resolve(&["order"]).unwrap();
        assert_eq!(inv.experiment, ExperimentConfig::new(Command::Order));
        assert_eq!(inv.format, Format::Csv);
        assert!(resolve(&["scan", "--schemes", "XYZ"]).is_err());
        assert!(resolve(&["scan", "--threads", "many"]).is_err());
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "A = 3.25\nC = 1.5\nM = [512, 1024]\nschemes = [\"BO\"]\nxi-max = 7\nout = \"x.csv\"\n",
        )
        .unwrap();
        let inv = resolve(&["scan", "--config", path.to_str().unwrap(), "--C", "2"]).unwrap();
        let e = &inv.experiment;
        assert_eq!(e.amplitudes, vec![3.25]);
        assert_eq!(e.chirp, 2.0);
        assert_eq!(e.m_values, Some(vec![512, 1024]));
        assert_eq!(e.schemes, vec![SchemeId::Bo]);
        assert_eq!(e.xi_range, Some((-20.0, 7.0)));
        assert_eq!(inv.out, Some(dir.path().join("x.csv")));
    }

    #[test]
    fn config_file_errors() {
        let base = Path::new(".");
        assert!(parse_config_file("bogus = 1", base).is_err());
        assert!(parse_config_file("C = \"x\"", base).is_err());
        assert!(parse_config_file("A = = 1", base).is_err());
        assert!(parse_config_file("format = \"xml\"", base).is_err());
    }
}
