// SPDX-License-Identifier: Apache-2.0

use rand::Rng;

use crate::units::SimDuration;

use super::{DeviceProfile, IoCommand, SimRng};

/// Latency sample plus transfer time for a command issued to an otherwise idle
/// device.
pub fn service_time(profile: &DeviceProfile, cmd: &IoCommand, rng: &mut SimRng) -> SimDuration {
    service_time_loaded(profile, cmd.size, 1, rng)
}

/// Service time when `in_flight` commands (this one included) share the
/// device's round trip.
pub fn service_time_loaded(profile: &DeviceProfile, size: u64, in_flight: u32, rng: &mut SimRng) -> SimDuration {
    let n = in_flight.max(1) as f64;
    let mut latency =
        profile.base_latency_us - profile.shared_latency_us + profile.shared_latency_us / n;
    if profile.latency_jitter > 0.0 {
        latency *= 1.0 + profile.latency_jitter * rng.random_range(-1.0..1.0);
    }
    let transfer = size as f64 * 1e6 / profile.internal_bandwidth as f64;
    (latency + transfer).round().max(1.0) as SimDuration
}
