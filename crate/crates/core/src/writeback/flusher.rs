// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::units::{ByteSize, SimDuration, SimTime, KIB, MIB};

use super::{FileId, PageCacheState};

/// Writeback tunables shared by every flusher in a world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlusherParams {
    pub wakeup_interval_ms: u64,
    /// Bytes a flusher writes per activation before going back to sleep.
    pub batch_budget: ByteSize,
    /// Largest command the block layer builds by merging.
    pub max_merged_size: ByteSize,
    /// Size of the individual requests writeback and fsync hand to a queue.
    pub request_size: ByteSize,
}

impl Default for FlusherParams {
    fn default() -> Self {
        FlusherParams {
            wakeup_interval_ms: 5_000,
            batch_budget: ByteSize(32 * MIB),
            max_merged_size: ByteSize(MIB),
            request_size: ByteSize(8 * KIB),
        }
    }
}

impl FlusherParams {
    pub fn wakeup_interval(&self) -> SimDuration {
        self.wakeup_interval_ms * 1000
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.wakeup_interval_ms == 0 {
            errs.push("writeback: wakeup_interval_ms must be > 0".to_string());
        }
        if self.batch_budget.0 == 0 {
            errs.push("writeback: batch_budget must be > 0".to_string());
        }
        if self.request_size.0 == 0 {
            errs.push("writeback: request_size must be > 0".to_string());
        }
        if self.max_merged_size.0 < self.request_size.0 {
            errs.push("writeback: max_merged_size must be >= request_size".to_string());
        }
        errs
    }
}

/// The single writeback thread of one (logical) block device.
///
/// An activation starts on the periodic timer or when the kernel kicks the
/// flusher because dirty memory crossed the background threshold. During an
/// activation the flusher walks dirty files oldest first, lowest offset
/// first, and keeps exactly one command outstanding until the activation's
/// byte budget is spent or nothing dirty remains.
#[derive(Clone, Debug)]
pub struct FlusherState {
    pub device: usize,
    /// CPU the flusher's submissions are issued from.
    pub vcpu: u32,
    pub next_wakeup: SimTime,
    pub wakeup_interval: SimDuration,
    pub batch_budget: u64,
    /// Identifier of the outstanding submission, if any.
    pub in_flight: Option<u64>,
    remaining: u64,
    active: bool,
    activations: u64,
}

impl FlusherState {
    pub fn new(device: usize, vcpu: u32, params: &FlusherParams) -> Self {
        FlusherState {
            device,
            vcpu,
            next_wakeup: params.wakeup_interval(),
            wakeup_interval: params.wakeup_interval(),
            batch_budget: params.batch_budget.0,
            in_flight: None,
            remaining: 0,
            active: false,
            activations: 0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn activations(&self) -> u64 {
        self.activations
    }

    /// Periodic timer: re-arms the timer and starts an activation unless one
    /// is already running.
    pub fn tick(&mut self, now: SimTime) {
        self.next_wakeup = now + self.wakeup_interval;
        self.begin();
    }

    /// Starts an activation with a fresh budget. Returns false if already active.
    pub fn begin(&mut self) -> bool {
        if self.active {
            return false;
        }
        self.active = true;
        self.remaining = self.batch_budget;
        self.activations += 1;
        true
    }

    /// Picks the next run to write and moves it under writeback, or ends the
    /// activation when the budget is spent or the device is clean.
    pub fn next_run(&mut self, cache: &mut PageCacheState, max_run: u64) -> Option<(FileId, u64, u64)> {
        if !self.active || self.in_flight.is_some() {
            return None;
        }
        let file = match cache.oldest_dirty_file(self.device) {
            Some(f) if self.remaining > 0 => f,
            _ => {
                self.active = false;
                return None;
            }
        };
        let (offset, len) = cache
            .take_run(file, max_run.min(self.remaining))
            .expect("oldest dirty file has an extent");
        self.remaining -= len;
        Some((file, offset, len))
    }

    pub fn complete(&mut self) {
        self.in_flight = None;
    }
}
