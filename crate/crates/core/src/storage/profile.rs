// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::units::GIB;

/// Volume size used by every shipped configuration.
pub const DEFAULT_CAPACITY: u64 = 200 * GIB;

/// Performance description of one virtual or local block device.
///
/// Latency is `base_latency_us` on average with a uniform spread of
/// `±latency_jitter` (as a fraction of the mean). `shared_latency_us` is the
/// part of that latency paid once per round trip rather than once per
/// command: with `n` commands in flight each one sees
/// `base - shared + shared / n`. Local devices leave it at zero; distributed
/// volumes use it to reproduce the superlinear gain from parallel issuers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    pub base_latency_us: f64,
    pub latency_jitter: f64,
    pub shared_latency_us: f64,
    /// Transfer rate in bytes per second.
    pub internal_bandwidth: u64,
    /// Operations per second, 0 for unlimited.
    pub iops_limit: u64,
    /// Bytes per second, 0 for unlimited.
    pub bandwidth_limit: u64,
    pub hw_queue_count: u32,
    /// Tags per hardware queue: commands a queue may have dispatched at once.
    pub queue_depth: u32,
    pub burst_iops: u64,
    pub burst_credit_capacity: u64,
    /// Credit refill rate while the IOPS bucket sits full, as a fraction of `iops_limit`.
    pub burst_refill_fraction: f64,
    pub capacity: u64,
}

impl DeviceProfile {
    /// A device with no QoS limits, no jitter and no latency sharing.
    pub fn simple(name: &str, base_latency_us: f64, internal_bandwidth: u64) -> Self {
        DeviceProfile {
            name: name.to_string(),
            base_latency_us,
            latency_jitter: 0.0,
            shared_latency_us: 0.0,
            internal_bandwidth,
            iops_limit: 0,
            bandwidth_limit: 0,
            hw_queue_count: 2,
            queue_depth: 32,
            burst_iops: 0,
            burst_credit_capacity: 0,
            burst_refill_fraction: 0.0,
            capacity: DEFAULT_CAPACITY,
        }
    }

    pub fn is_unlimited(&self) -> bool {
        self.iops_limit == 0 && self.bandwidth_limit == 0
    }

    /// Lists every violated invariant.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let n = &self.name;
        if !(self.base_latency_us > 0.0 && self.base_latency_us.is_finite()) {
            errs.push(format!("profile {n}: base_latency_us must be > 0"));
        }
        if !(0.0..1.0).contains(&self.latency_jitter) {
            errs.push(format!("profile {n}: latency_jitter must lie in [0, 1)"));
        }
        if !(0.0..=self.base_latency_us).contains(&self.shared_latency_us) {
            errs.push(format!(
                "profile {n}: shared_latency_us must lie in [0, base_latency_us]"
            ));
        }
        if self.internal_bandwidth == 0 {
            errs.push(format!("profile {n}: internal_bandwidth must be > 0"));
        }
        if self.hw_queue_count == 0 {
            errs.push(format!("profile {n}: hw_queue_count must be >= 1"));
        }
        if self.queue_depth == 0 {
            errs.push(format!("profile {n}: queue_depth must be >= 1"));
        }
        if (self.burst_iops == 0) != (self.burst_credit_capacity == 0) {
            errs.push(format!(
                "profile {n}: burst_iops and burst_credit_capacity must both be zero or both nonzero"
            ));
        }
        if !(self.burst_refill_fraction >= 0.0 && self.burst_refill_fraction.is_finite()) {
            errs.push(format!("profile {n}: burst_refill_fraction must be >= 0"));
        }
        if self.capacity == 0 {
            errs.push(format!("profile {n}: capacity must be > 0"));
        }
        errs
    }
}
