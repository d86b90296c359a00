// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::units::SimDuration;

/// Dirty-memory thresholds for write throttling, as fractions of total memory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThrottleParams {
    pub background_ratio: f64,
    pub hard_ratio: f64,
    /// Pause applied to each write at or above `hard_ratio`, in microseconds.
    pub max_pause_us: u64,
}

impl Default for ThrottleParams {
    fn default() -> Self {
        ThrottleParams {
            background_ratio: 0.10,
            hard_ratio: 0.20,
            max_pause_us: 200_000,
        }
    }
}

impl ThrottleParams {
    pub fn validate(&self) -> Vec<String> {
        let ok = 0.0 < self.background_ratio
            && self.background_ratio < self.hard_ratio
            && self.hard_ratio <= 1.0;
        if ok {
            Vec::new()
        } else {
            vec![format!(
                "throttle: need 0 < background_ratio ({}) < hard_ratio ({}) <= 1",
                self.background_ratio, self.hard_ratio
            )]
        }
    }
}

/// Pause imposed on a writer at the given dirty ratio: zero up to the
/// background threshold, a linear ramp to `max_pause_us` at the hard limit,
/// and `max_pause_us` beyond it.
pub fn throttle_delay(params: &ThrottleParams, dirty_ratio: f64) -> SimDuration {
    if dirty_ratio <= params.background_ratio {
        return 0;
    }
    if dirty_ratio >= params.hard_ratio {
        return params.max_pause_us;
    }
    let frac = (dirty_ratio - params.background_ratio) / (params.hard_ratio - params.background_ratio);
    (frac * params.max_pause_us as f64).round() as SimDuration
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundaries() {
        let p = ThrottleParams::default();
        assert_eq!(throttle_delay(&p, 0.0), 0);
        assert_eq!(throttle_delay(&p, 0.10), 0);
        assert_eq!(throttle_delay(&p, 0.20), 200_000);
        assert_eq!(throttle_delay(&p, 1.0), 200_000);
    }

    #[test]
    fn midpoint_is_half_pause() {
        let p = ThrottleParams::default();
        assert_eq!(throttle_delay(&p, 0.15), 100_000);
    }

    #[test]
    fn rejects_inverted_thresholds() {
        let p = ThrottleParams {
            background_ratio: 0.3,
            hard_ratio: 0.2,
            max_pause_us: 1,
        };
        assert_eq!(p.validate().len(), 1);
    }

    proptest! {
        #[test]
        fn monotone_in_ratio(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let p = ThrottleParams::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(throttle_delay(&p, lo) <= throttle_delay(&p, hi));
        }
    }
}
