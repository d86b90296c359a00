// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

/// Counters of one physical member of a RAID group.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemberMetrics {
    pub name: String,
    pub commands: u64,
    pub bytes: u64,
    pub qos_wait_share: f64,
}

/// Per logical device (a plain device or a RAID group), as iostat would
/// report it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviceMetrics {
    pub name: String,
    /// Objects placed on this device.
    pub objects: Vec<String>,
    pub throughput_mb_s: f64,
    pub write_mb_s: f64,
    pub read_mb_s: f64,
    pub bytes_written: u64,
    pub bytes_read: u64,
    /// Requests handed to the queues, before merging.
    pub requests: u64,
    /// Commands issued to the device, after merging.
    pub commands: u64,
    pub merge_rate_pct: f64,
    pub mean_command_kb: f64,
    /// Time-averaged number of dispatched commands holding a tag, as iostat
    /// reports it.
    pub mean_queue_depth: f64,
    /// Share of command residence time spent waiting for QoS admission.
    pub qos_wait_share: f64,
    pub flusher_activations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<MemberMetrics>,
}

impl DeviceMetrics {
    pub fn merge_rate(&self) -> f64 {
        self.merge_rate_pct / 100.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub t_s: f64,
    pub dirty_bytes: u64,
    pub writeback_bytes: u64,
    pub dirty_ratio: f64,
    pub throttle_delay_us: u64,
    pub commits: u64,
    /// Application-level throughput during the interval.
    pub app_mb_s: f64,
    /// Device throughput during the interval, in `devices` order.
    pub device_mb_s: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: u64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencySummary {
    pub fn from_micros(samples: &mut [u64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        samples.sort_unstable();
        let n = samples.len();
        let ms = |v: u64| v as f64 / 1000.0;
        let pct = |p: f64| ms(samples[((n as f64 * p).ceil() as usize).clamp(1, n) - 1]);
        Some(LatencySummary {
            count: n as u64,
            mean_ms: samples.iter().map(|&v| v as f64).sum::<f64>() / n as f64 / 1000.0,
            p50_ms: pct(0.50),
            p95_ms: pct(0.95),
            p99_ms: pct(0.99),
            max_ms: ms(samples[n - 1]),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirtySummary {
    pub bytes_dirtied: u64,
    pub bytes_flushed: u64,
    /// Dirty or under writeback when the run ended.
    pub residual_bytes: u64,
    pub peak_dirty_ratio: f64,
    /// First time a writer was paused by dirty throttling.
    pub throttle_onset_s: Option<f64>,
    pub throttled_writes: u64,
}

impl DirtySummary {
    pub fn conserved(&self) -> bool {
        self.bytes_dirtied == self.bytes_flushed + self.residual_bytes
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub duration_s: f64,
    /// "fio" or "oltp".
    pub workload: String,
    /// Bytes the workload moved (reads and writes as the application saw them).
    pub app_bytes: u64,
    pub throughput_mb_s: f64,
    pub committed_txns: u64,
    pub txn_rate_proxy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commit_latency: Option<LatencySummary>,
    /// Device holding the WAL (OLTP) or the benchmark file (fio).
    pub focus_device: String,
    pub devices: Vec<DeviceMetrics>,
    pub dirty: DirtySummary,
    pub events: u64,
    pub timeline: Vec<TimelinePoint>,
    #[serde(skip)]
    pub wall_clock_ms: f64,
}

impl MetricsReport {
    pub fn device(&self, name: &str) -> Option<&DeviceMetrics> {
        self.devices.iter().find(|d| d.name == name)
    }

    pub fn focus(&self) -> Option<&DeviceMetrics> {
        self.device(&self.focus_device)
    }

    /// The figure of merit compared across scenarios.
    pub fn headline(&self) -> (&'static str, f64) {
        if self.workload == "oltp" {
            ("txn_per_min", self.txn_rate_proxy)
        } else {
            ("mb_per_s", self.throughput_mb_s)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub metric: String,
    pub value: f64,
    pub ratio: f64,
    pub focus_device: String,
    pub merge_rate_pct: f64,
    pub mean_queue_depth: f64,
    pub queue_depth_ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Tabulates each report's headline metric and focus-device merge rate and
/// queue depth, with ratios against the first report.
pub fn compare(reports: &[MetricsReport]) -> Vec<ComparisonRow> {
    let Some(base) = reports.first() else {
        return Vec::new();
    };
    let depth = |r: &MetricsReport| r.focus().map_or(0.0, |d| d.mean_queue_depth);
    let (_, base_value) = base.headline();
    let base_depth = depth(base);
    reports
        .iter()
        .map(|r| {
            let (metric, value) = r.headline();
            let focus = r.focus();
            ComparisonRow {
                scenario: r.scenario.clone(),
                metric: metric.to_string(),
                value,
                ratio: ratio(value, base_value),
                focus_device: r.focus_device.clone(),
                merge_rate_pct: focus.map_or(0.0, |d| d.merge_rate_pct),
                mean_queue_depth: depth(r),
                queue_depth_ratio: ratio(depth(r), base_depth),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_use_nearest_rank() {
        let mut v: Vec<u64> = (1..=100).map(|x| x * 1000).collect();
        let s = LatencySummary::from_micros(&mut v).unwrap();
        assert_eq!(s.p50_ms, 50.0);
        assert_eq!(s.p99_ms, 99.0);
        assert_eq!(s.max_ms, 100.0);
        assert_eq!(s.mean_ms, 50.5);
        assert!(LatencySummary::from_micros(&mut []).is_none());
    }

    #[test]
    fn identical_reports_compare_to_one() {
        let r = MetricsReport {
            scenario: "a".into(),
            workload: "oltp".into(),
            txn_rate_proxy: 1234.0,
            focus_device: "d".into(),
            devices: vec![DeviceMetrics {
                name: "d".into(),
                mean_queue_depth: 3.0,
                ..Default::default()
            }],
            ..Default::default()
        };
        let rows = compare(&[r.clone(), r]);
        assert!(rows.iter().all(|row| row.ratio == 1.0 && row.queue_depth_ratio == 1.0));
    }

    #[test]
    fn ratios_are_against_the_first() {
        let mk = |name: &str, v: f64| MetricsReport {
            scenario: name.into(),
            workload: "fio".into(),
            throughput_mb_s: v,
            ..Default::default()
        };
        let rows = compare(&[mk("b1", 10.0), mk("p2", 35.0)]);
        assert_eq!(rows[1].ratio, 3.5);
        assert_eq!(rows[1].metric, "mb_per_s");
    }
}
