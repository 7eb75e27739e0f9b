use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::SweepConfig;
use crate::error::Result;
use crate::Point;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 10] = ["experiment", "f", "g", "lambda", "N", "M", "value", "diag_N_delta", "diag_path_delta", "grid"];

/// A diagnostic above this fraction of the value marks the row unreliable.
pub const RELIABILITY_FRACTION: f64 = 0.1;
/// Values and diagnostics both below this are an exact zero resolved to roundoff.
pub const RELIABILITY_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub experiment: String,
    pub f: String,
    pub g: String,
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub value: f64,
    #[serde(rename = "diag_N_delta")]
    pub diag_n_delta: Option<f64>,
    pub diag_path_delta: Option<f64>,
    pub grid: String,
    pub reliable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(experiment: impl Into<String>, f: impl Into<String>, g: impl Into<String>, lambda: f64, n: usize, m: usize, value: f64) -> Self {
        Self {
            experiment: experiment.into(),
            f: f.into(),
            g: g.into(),
            lambda,
            n,
            m,
            value,
            diag_n_delta: None,
            diag_path_delta: None,
            grid: String::new(),
            reliable: true,
            argmax: None,
            details: BTreeMap::new(),
        }
    }

    pub fn diag_n(mut self, d: f64) -> Self {
        self.diag_n_delta = Some(d);
        self.refresh();
        self
    }

    pub fn diag_path(mut self, d: f64) -> Self {
        self.diag_path_delta = Some(d);
        self.refresh();
        self
    }

    pub fn diag_path_opt(self, d: Option<f64>) -> Self {
        match d {
            Some(d) => self.diag_path(d),
            None => self,
        }
    }

    pub fn on_grid(mut self, grid: impl ToString) -> Self {
        self.grid = grid.to_string();
        self
    }

    pub fn at(mut self, p: &Point) -> Self {
        self.argmax = Some(p.coords().iter().map(|c| [c.re, c.im]).collect());
        self
    }

    pub fn detail(mut self, key: &str, v: f64) -> Self {
        self.details.insert(key.to_string(), v);
        self
    }

    /// Largest diagnostic present.
    pub fn diag(&self) -> f64 {
        let (a, b) = (self.diag_n_delta.unwrap_or(0.0), self.diag_path_delta.unwrap_or(0.0));
        if a.is_nan() || b.is_nan() {
            return f64::NAN;
        }
        a.max(b)
    }

    fn refresh(&mut self) {
        let d = self.diag();
        self.reliable = d.is_finite() && self.value.is_finite() && (d <= RELIABILITY_FRACTION * self.value.abs() || (d <= RELIABILITY_FLOOR && self.value.abs() <= RELIABILITY_FLOOR));
    }

    fn csv_record(&self) -> [String; 10] {
        let opt = |d: Option<f64>| d.map(|v| format!("{v:e}")).unwrap_or_default();
        let experiment = if self.reliable { self.experiment.clone() } else { format!("{}:UNRELIABLE", self.experiment) };
        [
            experiment,
            self.f.clone(),
            self.g.clone(),
            format!("{}", self.lambda),
            self.n.to_string(),
            self.m.to_string(),
            format!("{:e}", self.value),
            opt(self.diag_n_delta),
            opt(self.diag_path_delta),
            self.grid.clone(),
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl TrendCheck {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub generator: String,
    pub config: SweepConfig,
    pub rows: Vec<Row>,
    pub trends: Vec<TrendCheck>,
}

impl SweepResult {
    pub fn new(config: SweepConfig, mut rows: Vec<Row>) -> Self {
        // stable, so quantities keep their order within one lambda
        rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        Self { schema_version: SCHEMA_VERSION, generator: format!("qlab {}", env!("CARGO_PKG_VERSION")), config, rows, trends: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.trends.iter().all(|t| t.passed)
    }

    /// Rows of one quantity, in lambda order.
    pub fn series(&self, experiment: &str) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.experiment == experiment).collect()
    }

    pub fn values(&self, experiment: &str) -> Vec<f64> {
        self.series(experiment).iter().map(|r| r.value).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            out.write_record(r.csv_record()).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e.to_string()))
}

/// Reliable rows are nonincreasing, allowing each step the larger of the
/// two diagnostics plus a rounding floor.
pub fn nonincreasing(name: &str, rows: &[&Row]) -> TrendCheck {
    let reliable: Vec<&&Row> = rows.iter().filter(|r| r.reliable).collect();
    for w in reliable.windows(2) {
        let slack = w[0].diag().max(w[1].diag()) + 1e-12 * w[0].value.abs().max(1e-3);
        if w[1].value > w[0].value + slack {
            return TrendCheck::new(
                name,
                false,
                format!("value rises from {:e} at lambda {} to {:e} at lambda {}", w[0].value, w[0].lambda, w[1].value, w[1].lambda),
            );
        }
    }
    TrendCheck::new(name, true, format!("{} reliable of {} rows nonincreasing", reliable.len(), rows.len()))
}

pub fn strictly_decreasing(name: &str, rows: &[&Row]) -> TrendCheck {
    for w in rows.windows(2) {
        if !(w[1].value < w[0].value) {
            return TrendCheck::new(name, false, format!("{:e} at lambda {} does not drop below {:e}", w[1].value, w[1].lambda, w[0].value));
        }
    }
    TrendCheck::new(name, true, format!("{} rows strictly decreasing", rows.len()))
}

pub fn strictly_increasing(name: &str, rows: &[&Row]) -> TrendCheck {
    for w in rows.windows(2) {
        if !(w[1].value > w[0].value) {
            return TrendCheck::new(name, false, format!("{:e} at lambda {} does not rise above {:e}", w[1].value, w[1].lambda, w[0].value));
        }
    }
    TrendCheck::new(name, true, format!("{} rows strictly increasing", rows.len()))
}

pub fn all_below(name: &str, rows: &[&Row], bound: f64) -> TrendCheck {
    match rows.iter().find(|r| !(r.value < bound)) {
        Some(r) => TrendCheck::new(name, false, format!("{:e} at lambda {} is not below {bound:e}", r.value, r.lambda)),
        None => TrendCheck::new(name, true, format!("{} rows below {bound:e}", rows.len())),
    }
}
