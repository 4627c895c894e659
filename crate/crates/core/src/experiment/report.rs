//! Tabular experiment output.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// One measurement: `metric = value` for a scheme, grid size and spectral key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scheme: String,
    pub m: Option<usize>,
    pub key: Option<f64>,
    pub metric: String,
    pub value: f64,
}

impl Row {
    pub fn new(
        scheme: impl Into<String>,
        m: Option<usize>,
        key: Option<f64>,
        metric: &str,
        value: f64,
    ) -> Self {
        Self {
            scheme: scheme.into(),
            m,
            key,
            metric: metric.to_string(),
            value,
        }
    }
}

/// Rows plus the name of the key column (`xi` for spectral scans, `A` for
/// amplitude sweeps).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub key_name: String,
    pub rows: Vec<Row>,
}

/// Metrics that measure time rather than numerics.
pub const TIMING_METRICS: [&str; 1] = ["wall_clock_s"];

fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_float(s: &str) -> Result<f64, String> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse::<f64>().map_err(|e| format!("{s:?}: {e}")),
    }
}

impl ExperimentReport {
    pub fn new(key_name: &str) -> Self {
        Self {
            key_name: key_name.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn rows_for<'a>(&'a self, scheme: &'a str, metric: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.scheme == scheme && r.metric == metric)
    }

    /// The single value of `metric` for `scheme` and `m`, if present.
    pub fn value(&self, scheme: &str, m: Option<usize>, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.m == m && r.metric == metric)
            .map(|r| r.value)
    }

    /// Rows with timing metrics removed, for reproducibility comparisons.
    pub fn numeric_rows(&self) -> Vec<&Row> {
        self.rows
            .iter()
            .filter(|r| !TIMING_METRICS.contains(&r.metric.as_str()))
            .collect()
    }

    /// Bitwise equality of every numeric column (NaN equal to NaN).
    pub fn numerically_identical(&self, other: &Self) -> bool {
        let (a, b) = (self.numeric_rows(), other.numeric_rows());
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| {
                x.scheme == y.scheme
                    && x.m == y.m
                    && x.metric == y.metric
                    && x.key.map(f64::to_bits) == y.key.map(f64::to_bits)
                    && x.value.to_bits() == y.value.to_bits()
            })
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| ExperimentError::Io(e.to_string());
        w.write_record(["scheme", "M", self.key_name.as_str(), "metric", "value"])
            .map_err(io)?;
        for r in &self.rows {
            let m = r.m.map(|m| m.to_string()).unwrap_or_default();
            let key = r.key.map(format_float).unwrap_or_default();
            w.write_record([r.scheme.as_str(), &m, &key, &r.metric, &format_float(r.value)])
                .map_err(io)?;
        }
        w.flush().map_err(|e| ExperimentError::Io(e.to_string()))
    }

    pub fn read_csv(input: impl Read) -> Result<Self, ExperimentError> {
        let mut rdr = csv::Reader::from_reader(input);
        let bad = |e: String| ExperimentError::Io(format!("malformed report: {e}"));
        let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if headers.len() != 5 {
            return Err(bad(format!("expected 5 columns, got {}", headers.len())));
        }
        let mut report = Self::new(&headers[2]);
        for record in rdr.records() {
            let rec = record.map_err(|e| bad(e.to_string()))?;
            let m = if rec[1].is_empty() {
                None
            } else {
                Some(rec[1].parse().map_err(|e| bad(format!("{e}")))?)
            };
            let key = if rec[2].is_empty() {
                None
            } else {
                Some(parse_float(&rec[2]).map_err(bad)?)
            };
            report.push(Row {
                scheme: rec[0].to_string(),
                m,
                key,
                metric: rec[3].to_string(),
                value: parse_float(&rec[4]).map_err(bad)?,
            });
        }
        Ok(report)
    }

    /// JSON array of row objects; non-finite values become `null`.
    pub fn to_json_value(&self) -> serde_json::Value {
        let finite = |v: f64| {
            if v.is_finite() {
                serde_json::json!(v)
            } else {
                serde_json::Value::Null
            }
        };
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut obj = serde_json::Map::new();
                obj.insert("scheme".into(), serde_json::json!(r.scheme));
                obj.insert("M".into(), serde_json::json!(r.m));
                obj.insert(
                    self.key_name.clone(),
                    r.key.map_or(serde_json::Value::Null, finite),
                );
                obj.insert("metric".into(), serde_json::json!(r.metric));
                obj.insert("value".into(), finite(r.value));
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }

    pub fn write_json(&self, mut out: impl Write) -> Result<(), ExperimentError> {
        serde_json::to_writer_pretty(&mut out, &self.to_json_value())
            .map_err(|e| ExperimentError::Io(e.to_string()))?;
        writeln!(out).map_err(|e| ExperimentError::Io(e.to_string()))
    }

    pub fn read_json(input: impl Read) -> Result<Self, ExperimentError> {
        let bad = |e: String| ExperimentError::Io(format!("malformed report: {e}"));
        let value: serde_json::Value = serde_json::from_reader(input).map_err(|e| bad(e.to_string()))?;
        let rows = value.as_array().ok_or_else(|| bad("expected an array".into()))?;
        let key_name = rows
            .first()
            .and_then(|r| r.as_object())
            .and_then(|o| {
                o.keys()
                    .find(|k| !["scheme", "M", "metric", "value"].contains(&k.as_str()))
                    .cloned()
            })
            .unwrap_or_else(|| "xi".to_string());
        let mut report = Self::new(&key_name);
        let num = |v: &serde_json::Value| v.as_f64().unwrap_or(f64::NAN);
        for r in rows {
            let o = r.as_object().ok_or_else(|| bad("row is not an object".into()))?;
            report.push(Row {
                scheme: o
                    .get("scheme")
                    .and_then(|v| v.as_str())
                    .unwrap_or_default()
                    .to_string(),
                m: o.get("M").and_then(|v| v.as_u64()).map(|m| m as usize),
                key: o.get(&key_name).filter(|v| !v.is_null()).map(num),
                metric: o
                    .get("metric")
                    .and_then(|v| v.as_str())
                    .unwrap_or_default()
                    .to_string(),
                value: o.get("value").map(num).unwrap_or(f64::NAN),
            });
        }
        Ok(report)
    }
}
