//! Serialization of experiment reports: one CSV per series and a JSON summary.
//!
//! Everything written here is a pure function of the report, so identical
//! runs give byte-identical files. Wall-clock time goes to a separate file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::experiments::{ExperimentReport, Scalar, Series};

#[derive(Serialize)]
struct SeriesEntry<'a> {
    name: &'a str,
    file: String,
    columns: &'a [String],
    rows: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    seed: u64,
    parameters: &'a serde_json::Value,
    scalars: &'a BTreeMap<String, Scalar>,
    flags: &'a BTreeMap<String, bool>,
    labels: &'a BTreeMap<String, String>,
    series: Vec<SeriesEntry<'a>>,
}

pub fn series_file_name(report: &ExperimentReport, series: &Series) -> String {
    format!("{}.{}.csv", report.name, series.name)
}

pub fn summary_json(report: &ExperimentReport) -> String {
    let summary = Summary {
        name: &report.name,
        seed: report.seed,
        parameters: &report.parameters,
        scalars: &report.scalars,
        flags: &report.flags,
        labels: &report.labels,
        series: report
            .series
            .iter()
            .map(|s| SeriesEntry {
                name: &s.name,
                file: series_file_name(report, s),
                columns: &s.columns,
                rows: s.rows.len(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    text
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn series_csv(series: &Series) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&series.columns)?;
    for row in &series.rows {
        w.write_record(row.iter().map(|v| format_value(*v)))?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Paths of everything written.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub summary: PathBuf,
    pub config: Option<PathBuf>,
    pub series: Vec<PathBuf>,
}

/// Write `<name>.summary.json`, one `<name>.<series>.csv` per series and,
/// when given, the effective configuration as `<name>.config.json`.
pub fn write_report(dir: &Path, report: &ExperimentReport, config_json: Option<&str>) -> Result<Written> {
    fs::create_dir_all(dir)?;
    let summary = dir.join(format!("{}.summary.json", report.name));
    fs::write(&summary, summary_json(report))?;
    let config = match config_json {
        Some(text) => {
            let path = dir.join(format!("{}.config.json", report.name));
            fs::write(&path, format!("{text}\n"))?;
            Some(path)
        }
        None => None,
    };
    let mut series = Vec::with_capacity(report.series.len());
    for s in &report.series {
        let path = dir.join(series_file_name(report, s));
        fs::write(&path, series_csv(s)?)?;
        series.push(path);
    }
    Ok(Written {
        summary,
        config,
        series,
    })
}

pub fn write_timing(dir: &Path, name: &str, wall_seconds: f64, threads: usize) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.timing.json"));
    let value = serde_json::json!({ "wall_time_s": wall_seconds, "threads": threads });
    fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&value)?))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo", 3, serde_json::json!({ "h": "1/64" }));
        r.scalar("err", 1.5e-13, "1").flag("ok", true).label("mode", "tumbling");
        let mut s = Series::new("curve", &["t", "v"]);
        s.push(vec![0.0, 0.1]);
        s.push(vec![1e-4, -2.5e-17]);
        r.series.push(s);
        r
    }

    #[test]
    fn csv_has_header_and_round_trip_values() {
        let text = String::from_utf8(series_csv(&report().series[0]).unwrap()).unwrap();
        assert_eq!(text, "t,v\n0,0.1\n0.0001,-2.5e-17\n");
        let parsed: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, -2.5e-17);
    }

    #[test]
    fn files_are_written_and_repeatable() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_report(dir.path(), &report(), Some("{}")).unwrap();
        let first = fs::read(&a.summary).unwrap();
        write_report(dir.path(), &report(), Some("{}")).unwrap();
        assert_eq!(first, fs::read(&a.summary).unwrap());
        let summary: serde_json::Value = serde_json::from_slice(&first).unwrap();
        assert_eq!(summary["series"][0]["file"], "demo.curve.csv");
        assert_eq!(summary["scalars"]["err"]["value"], 1.5e-13);
        assert!(a.series[0].exists() && a.config.unwrap().exists());
    }
}
