// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::{ComparisonRow, MetricsReport};

pub fn report_json(report: &MetricsReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Encode(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Per-second timeline as CSV, one `<device>_mb_s` column per device.
pub fn timeline_csv(report: &MetricsReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "t_s",
        "dirty_bytes",
        "writeback_bytes",
        "dirty_ratio",
        "throttle_delay_us",
        "commits",
        "app_mb_s",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(report.devices.iter().map(|d| format!("{}_mb_s", d.name)));
    let enc = |e: csv::Error| Error::Encode(e.to_string());
    w.write_record(&header).map_err(enc)?;
    for p in &report.timeline {
        let mut row = vec![
            p.t_s.to_string(),
            p.dirty_bytes.to_string(),
            p.writeback_bytes.to_string(),
            format!("{:.6}", p.dirty_ratio),
            p.throttle_delay_us.to_string(),
            p.commits.to_string(),
            format!("{:.3}", p.app_mb_s),
        ];
        row.extend(p.device_mb_s.iter().map(|v| format!("{v:.3}")));
        w.write_record(&row).map_err(enc)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Encode(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Encode(e.to_string()))
}

/// Writes `<dir>/<scenario>.json` and `<dir>/<scenario>.csv` and returns both
/// paths.
pub fn write_report(report: &MetricsReport, dir: &Path) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join(format!("{}.json", report.scenario));
    let csv = dir.join(format!("{}.csv", report.scenario));
    std::fs::write(&json, report_json(report)?).map_err(|e| Error::io(&json, e))?;
    std::fs::write(&csv, timeline_csv(report)?).map_err(|e| Error::io(&csv, e))?;
    Ok((json, csv))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<MetricsReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes serializable rows as CSV with a header taken from the field names.
pub fn write_rows_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Encode(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Encode(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    write_rows_csv(rows, path)
}
