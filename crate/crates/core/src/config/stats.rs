// SPDX-License-Identifier: Apache-2.0

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::placement::PlacementPlan;
use crate::workload::TableSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsFile {
    #[serde(default)]
    tables: Vec<TableSpec>,
}

/// Reads a `[[tables]]` list of per-object statistics.
pub fn parse_stats(text: &str, path: &str) -> Result<Vec<TableSpec>> {
    let file: StatsFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    if file.tables.is_empty() {
        return Err(Error::Placement(format!("{path}: no tables listed")));
    }
    let errs: Vec<String> = file.tables.iter().flat_map(TableSpec::validate).collect();
    if !errs.is_empty() {
        return Err(Error::Validation(errs.into_iter().map(|e| format!("{path}: {e}")).collect()));
    }
    Ok(file.tables)
}

pub fn plan_toml(plan: &PlacementPlan) -> Result<String> {
    toml::to_string(plan).map_err(|e| Error::Encode(e.to_string()))
}

pub fn parse_plan(text: &str, path: &str) -> Result<PlacementPlan> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{plan, ScoreParams};

    const STATS: &str = r#"
[[tables]]
name = "stock"
write_freq = 1600.0
read_freq = 1500.0
size = "80GiB"

[[tables]]
name = "order_line"
write_freq = 1400.0
read_freq = 1300.0
size = "60GiB"
write_pattern = "append"

[[tables]]
name = "item"
write_freq = 0.0
read_freq = 700.0
size = "10MiB"
"#;

    #[test]
    fn plan_file_round_trips() {
        let tables = parse_stats(STATS, "s.toml").unwrap();
        assert_eq!(tables.len(), 3);
        let p = plan(&tables, 32, &ScoreParams::default()).unwrap();
        let text = plan_toml(&p).unwrap();
        assert_eq!(parse_plan(&text, "p.toml").unwrap(), p);
        assert_eq!(plan_toml(&plan(&tables, 32, &ScoreParams::default()).unwrap()).unwrap(), text);
    }

    #[test]
    fn empty_stats_are_rejected() {
        assert!(parse_stats("", "s.toml").is_err());
        assert!(parse_stats("tables = []", "s.toml").is_err());
    }
}
