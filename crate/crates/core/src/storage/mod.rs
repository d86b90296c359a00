// SPDX-License-Identifier: Apache-2.0

//! Block devices: latency, QoS token buckets, burst credits and closed-loop
//! direct-I/O measurement.

mod closed_loop;
mod profile;
mod qos;
mod service;

pub use closed_loop::{closed_loop_throughput, AccessPattern};
pub use profile::{DeviceProfile, DEFAULT_CAPACITY};
pub use qos::{qos_admit, QosState, TokenBucket};
pub use service::{service_time, service_time_loaded};

use serde::{Deserialize, Serialize};

use crate::units::SimTime;

/// Seeded generator used everywhere randomness is needed.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn sim_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IoKind {
    Read,
    Write,
}

/// Which database structure (or raw benchmark traffic) a request belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Wal,
    Table,
    Index,
    Raw,
}

/// A block-level request as seen by a device queue.
#[derive(Clone, Debug, PartialEq)]
pub struct IoCommand {
    pub device: usize,
    pub offset: u64,
    pub size: u64,
    pub kind: IoKind,
    pub origin: Origin,
    pub submit_time: SimTime,
    /// Number of original requests coalesced into this command.
    pub merged_count: u32,
}

impl IoCommand {
    pub fn new(device: usize, offset: u64, size: u64, kind: IoKind, origin: Origin, now: SimTime) -> Self {
        IoCommand {
            device,
            offset,
            size,
            kind,
            origin,
            submit_time: now,
            merged_count: 1,
        }
    }

    pub fn end(&self) -> u64 {
        self.offset + self.size
    }
}
