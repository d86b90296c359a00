// SPDX-License-Identifier: Apache-2.0

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::units::{mb_per_sec, secs, SimTime};

use super::{service_time_loaded, sim_rng, DeviceProfile, QosState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessPattern {
    Random,
    Sequential,
}

/// Direct-I/O throughput (MB/s) of `threads` closed-loop issuers, each waiting
/// for its command before sending the next, measured over `duration_s`
/// simulated seconds.
///
/// The device model has no seek cost, so `pattern` only matters to callers
/// that also model merging; it is accepted here for a uniform job description.
pub fn closed_loop_throughput(
    profile: &DeviceProfile,
    threads: u32,
    io_size: u64,
    _pattern: AccessPattern,
    duration_s: f64,
    seed: u64,
) -> f64 {
    assert!(threads >= 1 && io_size > 0, "closed loop needs threads >= 1 and io_size > 0");
    let horizon = secs(duration_s);
    let mut rng = sim_rng(seed);
    let mut qos = QosState::new(profile);

    #[derive(PartialEq, Eq, PartialOrd, Ord)]
    enum Ev {
        // Completions sort first so a finishing command leaves the device
        // before a simultaneous one starts.
        Done,
        Start,
    }
    let mut heap: BinaryHeap<Reverse<(SimTime, Ev, u64)>> = BinaryHeap::new();
    let mut seq = 0u64;
    for _ in 0..threads {
        let at = qos.admit(io_size, 0);
        heap.push(Reverse((at, Ev::Start, seq)));
        seq += 1;
    }

    let mut in_flight = 0u32;
    let mut bytes = 0u64;
    let mut last_done: SimTime = 0;
    while let Some(Reverse((now, ev, _))) = heap.pop() {
        if now > horizon {
            break;
        }
        match ev {
            Ev::Start => {
                in_flight += 1;
                let st = service_time_loaded(profile, io_size, in_flight, &mut rng);
                heap.push(Reverse((now + st, Ev::Done, seq)));
            }
            Ev::Done => {
                in_flight -= 1;
                bytes += io_size;
                last_done = now;
                let at = qos.admit(io_size, now);
                heap.push(Reverse((at, Ev::Start, seq)));
            }
        }
        seq += 1;
    }
    mb_per_sec(bytes, last_done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{KIB, MIB};

    #[test]
    fn single_thread_unlimited_is_exact() {
        let p = DeviceProfile::simple("local", 55.0, 500 * MIB);
        let mbs = closed_loop_throughput(&p, 1, 8 * KIB, AccessPattern::Random, 10.0, 1);
        assert_eq!(mbs, 8.0 * KIB as f64 / MIB as f64 / 71e-6);
    }

    #[test]
    fn iops_limit_binds() {
        let mut p = DeviceProfile::simple("ebs", 300.0, 1024 * MIB);
        p.iops_limit = 16_000;
        let mbs = closed_loop_throughput(&p, 32, 8 * KIB, AccessPattern::Random, 30.0, 1);
        assert!((mbs - 125.0).abs() < 1.0, "{mbs}");
    }
}
