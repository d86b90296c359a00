// SPDX-License-Identifier: Apache-2.0

//! Per-volume QoS: continuously refilled token buckets for IOPS and
//! bandwidth, plus a burst-credit pool that lets a volume exceed its IOPS
//! baseline for a while after sitting idle.

use crate::units::SimTime;

use super::{DeviceProfile, IoCommand};

/// Seconds of traffic a bucket can bank while idle.
const BUCKET_DEPTH_SECS: f64 = 0.05;

// Float slack when checking for a whole token after rounding up to 1 µs.
const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TokenBucket {
    /// Tokens per microsecond.
    rate: f64,
    capacity: f64,
    tokens: f64,
    /// Time (µs) the token count was last brought up to date.
    last: f64,
}

impl TokenBucket {
    /// A bucket refilled at `per_sec` tokens per second, starting full.
    pub fn new(per_sec: f64, capacity: f64) -> Self {
        TokenBucket {
            rate: per_sec / 1e6,
            capacity,
            tokens: capacity,
            last: 0.0,
        }
    }

    pub fn tokens(&self) -> f64 {
        self.tokens
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Time at which the bucket becomes full, given its state at `last`.
    fn full_at(&self) -> f64 {
        self.last + (self.capacity - self.tokens).max(0.0) / self.rate
    }

    fn advance(&mut self, t: f64) {
        if t > self.last {
            self.tokens = (self.tokens + (t - self.last) * self.rate).min(self.capacity);
            self.last = t;
        }
    }

    /// Earliest time at or after `from` with at least `need` tokens. The bucket
    /// must already be advanced to `from`.
    fn ready_at(&self, from: f64, need: f64) -> f64 {
        if self.tokens + EPS >= need {
            from
        } else {
            from + (need - self.tokens) / self.rate
        }
    }

    fn take(&mut self, amount: f64) {
        self.tokens = (self.tokens - amount).max(0.0);
    }

    fn ensure_capacity(&mut self, amount: f64) {
        if amount > self.capacity {
            self.capacity = amount;
        }
    }
}

/// Admission-control state for one physical or virtual volume.
#[derive(Clone, Debug, PartialEq)]
pub struct QosState {
    iops: Option<TokenBucket>,
    bw: Option<TokenBucket>,
    /// Caps the extra rate granted by burst credits.
    burst: Option<TokenBucket>,
    burst_credits: f64,
    burst_credit_capacity: f64,
    /// Credits per microsecond while the IOPS bucket is full.
    credit_refill: f64,
    /// Admissions are granted in call order; no admission precedes this time.
    horizon: f64,
}

impl QosState {
    pub fn new(profile: &DeviceProfile) -> Self {
        let bucket = |per_sec: u64, floor: f64| {
            (per_sec > 0).then(|| {
                TokenBucket::new(per_sec as f64, (per_sec as f64 * BUCKET_DEPTH_SECS).max(floor))
            })
        };
        let burst_enabled = profile.iops_limit > 0 && profile.burst_iops > 0;
        QosState {
            iops: bucket(profile.iops_limit, 1.0),
            bw: bucket(profile.bandwidth_limit, 1.0),
            burst: if burst_enabled { bucket(profile.burst_iops, 1.0) } else { None },
            burst_credits: if burst_enabled { profile.burst_credit_capacity as f64 } else { 0.0 },
            burst_credit_capacity: profile.burst_credit_capacity as f64,
            credit_refill: profile.burst_refill_fraction * profile.iops_limit as f64 / 1e6,
            horizon: 0.0,
        }
    }

    pub fn iops_tokens(&self) -> Option<f64> {
        self.iops.as_ref().map(|b| b.tokens)
    }

    pub fn bandwidth_tokens(&self) -> Option<f64> {
        self.bw.as_ref().map(|b| b.tokens)
    }

    pub fn burst_credits(&self) -> f64 {
        self.burst_credits
    }

    fn advance(&mut self, t: f64) {
        if let Some(iops) = &mut self.iops {
            if self.burst.is_some() && t > iops.last {
                let idle_from = iops.full_at().max(iops.last);
                if t > idle_from {
                    self.burst_credits = (self.burst_credits + (t - idle_from) * self.credit_refill)
                        .min(self.burst_credit_capacity);
                }
            }
            iops.advance(t);
        }
        if let Some(b) = &mut self.bw {
            b.advance(t);
        }
        if let Some(b) = &mut self.burst {
            b.advance(t);
        }
    }

    /// Reserves one operation of `size` bytes and returns its admission time.
    pub fn admit(&mut self, size: u64, now: SimTime) -> SimTime {
        let t0 = (now as f64).max(self.horizon);
        self.advance(t0);

        let t_iops = match &self.iops {
            None => t0,
            Some(iops) => {
                let regular = iops.ready_at(t0, 1.0);
                match &self.burst {
                    Some(burst) if regular > t0 && self.burst_credits + EPS >= 1.0 => {
                        regular.min(burst.ready_at(t0, 1.0))
                    }
                    _ => regular,
                }
            }
        };
        let t_bw = match &mut self.bw {
            None => t0,
            Some(bw) => {
                bw.ensure_capacity(size as f64);
                bw.ready_at(t0, size as f64)
            }
        };
        // Round up to whole microseconds, ignoring float noise below 1 ns.
        let t = (t_iops.max(t_bw) - 1e-3).ceil().max(t0);
        self.advance(t);

        if let Some(bw) = &mut self.bw {
            bw.take(size as f64);
        }
        if let Some(iops) = &mut self.iops {
            if iops.tokens + EPS >= 1.0 {
                iops.take(1.0);
            } else if let Some(burst) = &mut self.burst {
                burst.take(1.0);
                self.burst_credits = (self.burst_credits - 1.0).max(0.0);
            }
        }
        self.horizon = t;
        t as SimTime
    }
}

/// Earliest time `>= now` at which `cmd` holds one IOPS token and `cmd.size`
/// bandwidth tokens. Updates `state`. A merged command still costs one IOPS
/// token regardless of how many requests it carries.
pub fn qos_admit(state: &mut QosState, _profile: &DeviceProfile, cmd: &IoCommand, now: SimTime) -> SimTime {
    state.admit(cmd.size, now)
}
