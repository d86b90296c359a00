// SPDX-License-Identifier: Apache-2.0

//! Calibrated device profiles shipped with the simulator.
//!
//! `local-ssd` and `ebs-gp3-like` are fitted to single-thread 8 KiB direct
//! random-write throughput of about 144 MB/s and 10.9 MB/s, and the cloud
//! profiles' `shared_latency_us` to the gain from parallel issuers.
//! `ceph-rbd-like` models a replicated RBD volume whose round trip is
//! dominated by network and replication latency.

use crate::storage::{DeviceProfile, DEFAULT_CAPACITY};
use crate::units::MIB;

pub const BUILTIN_PROFILES: &[&str] = &["local-ssd", "ebs-gp3-like", "ceph-rbd-like"];

pub fn builtin_profile(name: &str) -> Option<DeviceProfile> {
    let p = match name {
        "local-ssd" => DeviceProfile {
            name: name.to_string(),
            base_latency_us: 50.0,
            latency_jitter: 0.3,
            shared_latency_us: 0.0,
            internal_bandwidth: 2000 * MIB,
            iops_limit: 40_000,
            bandwidth_limit: 380 * MIB,
            hw_queue_count: 32,
            queue_depth: 64,
            burst_iops: 0,
            burst_credit_capacity: 0,
            burst_refill_fraction: 0.0,
            capacity: DEFAULT_CAPACITY,
        },
        "ebs-gp3-like" => DeviceProfile {
            name: name.to_string(),
            base_latency_us: 717.0,
            latency_jitter: 0.2,
            shared_latency_us: 600.0,
            internal_bandwidth: 400 * MIB,
            iops_limit: 16_000,
            bandwidth_limit: 1000 * MIB,
            hw_queue_count: 2,
            queue_depth: 32,
            burst_iops: 0,
            burst_credit_capacity: 0,
            burst_refill_fraction: 0.0,
            capacity: DEFAULT_CAPACITY,
        },
        "ceph-rbd-like" => DeviceProfile {
            name: name.to_string(),
            base_latency_us: 2600.0,
            latency_jitter: 0.2,
            shared_latency_us: 2400.0,
            internal_bandwidth: 110 * MIB,
            iops_limit: 13_000,
            bandwidth_limit: 0,
            hw_queue_count: 2,
            queue_depth: 32,
            burst_iops: 0,
            burst_credit_capacity: 0,
            burst_refill_fraction: 0.0,
            capacity: DEFAULT_CAPACITY,
        },
        _ => return None,
    };
    Some(p)
}
