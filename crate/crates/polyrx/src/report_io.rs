//! JSON and CSV renderings of throughput reports.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use polyrx_core::polyrx::{ReportRow, ThroughputReport};
use serde::Serialize;

/// Report rows without the receiver columns, for oracle-only runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub class: String,
    pub config: String,
    pub oracle_throughput_bps: f64,
}

fn oracle_rows(report: &ThroughputReport) -> Vec<OracleRow> {
    report
        .rows()
        .into_iter()
        .map(|r| OracleRow {
            class: r.class,
            config: r.config,
            oracle_throughput_bps: r.oracle_throughput_bps,
        })
        .collect()
}

pub fn to_csv(report: &ThroughputReport, oracle_only: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if oracle_only {
        for r in oracle_rows(report) {
            w.serialize(r)?;
        }
    } else {
        for r in report.rows() {
            w.serialize(r)?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Serialize)]
struct JsonReport<'a, R> {
    duration_s: f64,
    rows: Vec<R>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_seed_ratio: Option<&'a [f64]>,
}

pub fn to_json(report: &ThroughputReport, oracle_only: bool, per_seed_ratio: Option<&[f64]>) -> Result<String> {
    let text = if oracle_only {
        serde_json::to_string_pretty(&JsonReport {
            duration_s: report.duration_s,
            rows: oracle_rows(report),
            per_seed_ratio: None,
        })?
    } else {
        serde_json::to_string_pretty(&JsonReport::<ReportRow> {
            duration_s: report.duration_s,
            rows: report.rows(),
            per_seed_ratio,
        })?
    };
    Ok(text + "\n")
}

/// Writes `<dir>/<stem>.json` and `<dir>/<stem>.csv`.
pub fn write_report(
    dir: &Path,
    stem: &str,
    report: &ThroughputReport,
    oracle_only: bool,
    per_seed_ratio: Option<&[f64]>,
) -> Result<()> {
    let json = dir.join(format!("{stem}.json"));
    fs::write(&json, to_json(report, oracle_only, per_seed_ratio)?)
        .with_context(|| format!("writing {}", json.display()))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, to_csv(report, oracle_only)?).with_context(|| format!("writing {}", csv_path.display()))?;
    Ok(())
}
