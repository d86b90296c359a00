// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

/// Block failure probability `p`, replica count `r`, total blocks `b` spread
/// evenly over `k` volumes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityParams {
    pub p: f64,
    pub r: u32,
    pub b: u64,
    pub k: u64,
}

impl AvailabilityParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(0.0..=1.0).contains(&self.p) {
            errs.push(format!("p must lie in [0, 1], got {}", self.p));
        }
        if self.r == 0 {
            errs.push("r must be >= 1".to_string());
        }
        if self.b == 0 {
            errs.push("B must be >= 1".to_string());
        }
        if self.k == 0 {
            errs.push("k must be >= 1".to_string());
        } else if !self.b.is_multiple_of(self.k) {
            errs.push(format!("k = {} must divide B = {}", self.k, self.b));
        }
        errs
    }

    /// ln(1 - p^r): log-probability that one block survives.
    fn log_block_survival(&self) -> f64 {
        (-self.p.powi(self.r as i32)).ln_1p()
    }

    /// Log-probability that one volume of `b / k` blocks survives.
    fn log_volume_survival(&self) -> f64 {
        (self.b / self.k) as f64 * self.log_block_survival()
    }
}

/// Probability that a single volume loses at least one block.
pub fn volume_failure_probability(params: &AvailabilityParams) -> f64 {
    -params.log_volume_survival().exp_m1()
}

/// Probability that any of the `k` volumes fails: the system survives only
/// if every volume does. The result depends on `b` but not on `k`.
pub fn system_failure_probability(params: &AvailabilityParams) -> f64 {
    -(params.k as f64 * params.log_volume_survival()).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: f64, r: u32, b: u64, k: u64) -> AvailabilityParams {
        AvailabilityParams { p, r, b, k }
    }

    #[test]
    fn examples() {
        assert_eq!(system_failure_probability(&params(0.0, 3, 1000, 10)), 0.0);
        assert_eq!(system_failure_probability(&params(0.5, 1, 1, 1)), 0.5);
        let one = system_failure_probability(&params(1e-4, 3, 1_000_000, 1));
        let eight = system_failure_probability(&params(1e-4, 3, 1_000_000, 8));
        assert!(((one - eight) / one).abs() <= 1e-12);
        // Closed form 1 - (1 - 1e-12)^1e6 ≈ 1e-6.
        assert!((one / 1e-6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn certain_block_failure() {
        assert_eq!(system_failure_probability(&params(1.0, 2, 10, 5)), 1.0);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert_eq!(params(1.5, 0, 10, 3).validate().len(), 3);
        assert_eq!(params(0.1, 1, 0, 0).validate().len(), 2);
    }

    #[test]
    fn matches_direct_composition_for_large_p() {
        let a = params(0.3, 2, 12, 4);
        let block = 1.0 - 0.3f64.powi(2);
        let vol = 1.0 - block.powi(3);
        let sys = 1.0 - (1.0 - vol).powi(4);
        assert!((volume_failure_probability(&a) - vol).abs() < 1e-12);
        assert!((system_failure_probability(&a) - sys).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn monotone_in_p_b_and_r(p in 1e-6f64..0.5, dp in 1e-6f64..0.4, r in 1u32..5, b in 1u64..10_000) {
            let base = system_failure_probability(&params(p, r, b, 1));
            prop_assert!(system_failure_probability(&params(p + dp, r, b, 1)) >= base);
            prop_assert!(system_failure_probability(&params(p, r, b + 1, 1)) >= base);
            prop_assert!(system_failure_probability(&params(p, r + 1, b, 1)) <= base);
        }
    }
}
