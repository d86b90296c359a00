// SPDX-License-Identifier: Apache-2.0

//! File formats: TOML scenarios with a named profile library, TOML stats and
//! plan files, JSON reports and CSV tables.

mod report;
mod scenario_file;
mod stats;

pub use report::{read_report, report_json, timeline_csv, write_comparison_csv, write_report, write_rows_csv};
pub use scenario_file::{load_scenario, parse_scenario, resolve_profile};
pub use stats::{parse_plan, parse_stats, plan_toml};

/// 1-based line number of byte `offset` in `text`.
pub(crate) fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}
