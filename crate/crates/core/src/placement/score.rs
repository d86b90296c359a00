// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

/// Weights for write frequency, read frequency and size, plus the balance
/// threshold that triggers adding a group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub cv_threshold: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            alpha: 0.5,
            beta: 0.3,
            gamma: 0.2,
            cv_threshold: 0.3,
        }
    }
}

impl ScoreParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("params: {name} must be a nonnegative number"));
            }
        }
        if !(self.cv_threshold >= 0.0 && self.cv_threshold.is_finite()) {
            errs.push("params: cv_threshold must be a nonnegative number".to_string());
        }
        errs
    }
}

/// Min-max normalization onto [0, 1]. A constant population maps to 0.5.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.5 })
        .collect()
}

/// Weighted sum of an object's normalized write frequency, read frequency and
/// size.
pub fn score(norm_w: f64, norm_r: f64, norm_s: f64, params: &ScoreParams) -> f64 {
    params.alpha * norm_w + params.beta * norm_r + params.gamma * norm_s
}

/// Population standard deviation over mean; 0 when the mean is 0.
pub fn coefficient_of_variation(sums: &[f64]) -> f64 {
    if sums.is_empty() {
        return 0.0;
    }
    let n = sums.len() as f64;
    let mean = sums.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[0.0, 5.0, 10.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize(&[7.0]), vec![0.5]);
        assert_eq!(normalize(&[3.0, 3.0, 3.0]), vec![0.5; 3]);
    }

    #[test]
    fn score_examples() {
        let p = ScoreParams::default();
        assert_eq!(score(1.0, 1.0, 1.0, &p), 1.0);
        assert_eq!(score(0.0, 0.0, 0.0, &p), 0.0);
        assert!((score(1.0, 0.5, 0.25, &p) - 0.70).abs() < 1e-15);
    }

    #[test]
    fn cv_examples() {
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(coefficient_of_variation(&[1.0, 3.0]), 0.5);
        assert_eq!(coefficient_of_variation(&[0.0, 0.0]), 0.0);
    }

    proptest! {
        #[test]
        fn normalized_values_lie_in_unit_interval(v in prop::collection::vec(0.0f64..1e9, 1..20)) {
            for x in normalize(&v) {
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }

        #[test]
        fn normalization_ignores_positive_scale(v in prop::collection::vec(0.0f64..1e6, 1..20), k in 0.01f64..100.0) {
            let scaled: Vec<f64> = v.iter().map(|x| x * k).collect();
            for (a, b) in normalize(&v).iter().zip(normalize(&scaled)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn score_is_monotone(w in 0.0f64..1.0, r in 0.0f64..1.0, s in 0.0f64..1.0, d in 0.0f64..1.0) {
            let p = ScoreParams::default();
            let base = score(w, r, s, &p);
            prop_assert!(score((w + d).min(1.0), r, s, &p) >= base);
            prop_assert!(score(w, (r + d).min(1.0), s, &p) >= base);
            prop_assert!(score(w, r, (s + d).min(1.0), &p) >= base);
        }
    }
}
