//! Drivers for the validation experiments and the analytic references they use.

pub mod calibrate;
pub mod ellipsoid;
pub mod orientation;
pub mod reference;
pub mod relaxation;
pub mod shear;
pub mod stokes_check;
pub mod suspension;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{ExperimentParams, RunConfig};
use crate::error::Result;

/// A table whose first column is the independent variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == label)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scalar {
    pub value: f64,
    pub unit: String,
}

/// Everything an experiment produces, reproducible from `(name, parameters, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub scalars: BTreeMap<String, Scalar>,
    pub flags: BTreeMap<String, bool>,
    pub labels: BTreeMap<String, String>,
    pub series: Vec<Series>,
}

impl ExperimentReport {
    pub fn new(name: &str, seed: u64, parameters: impl Serialize) -> Self {
        Self {
            name: name.to_string(),
            seed,
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            scalars: BTreeMap::new(),
            flags: BTreeMap::new(),
            labels: BTreeMap::new(),
            series: Vec::new(),
        }
    }

    pub fn scalar(&mut self, label: &str, value: f64, unit: &str) -> &mut Self {
        self.scalars.insert(
            label.to_string(),
            Scalar {
                value,
                unit: unit.to_string(),
            },
        );
        self
    }

    pub fn flag(&mut self, label: &str, value: bool) -> &mut Self {
        self.flags.insert(label.to_string(), value);
        self
    }

    pub fn label(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.labels.insert(key.to_string(), value.into());
        self
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.scalars.get(label).map(|s| s.value)
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Dispatch a validated configuration to its experiment driver.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentReport> {
    let seed = config.seed;
    match &config.params {
        ExperimentParams::Calibrate(p) => calibrate::run(p, seed),
        ExperimentParams::EllipsoidDrag(p) => ellipsoid::run(p, seed),
        ExperimentParams::Relax(p) => relaxation::run(p, seed),
        ExperimentParams::Shear(p) => shear::run(p, seed),
        ExperimentParams::Suspension(p) => suspension::run(p, seed),
        ExperimentParams::StokesCheck(p) => stokes_check::run(p, seed),
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [1.0, 0.5, 0.25];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v).collect();
        let (a, b) = fit_line(&x, &y).unwrap();
        assert!((a - 2.0).abs() < 1e-14 && (b + 3.0).abs() < 1e-14);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn series_columns() {
        let mut s = Series::new("x", &["t", "v"]);
        s.push(vec![0.0, 1.0]);
        s.push(vec![1.0, 3.0]);
        assert_eq!(s.column("v").unwrap(), vec![1.0, 3.0]);
        assert!(s.column("w").is_none());
    }
}
