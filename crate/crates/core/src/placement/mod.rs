// SPDX-License-Identifier: Apache-2.0

//! Multi-volume data placement: object scoring, the KFT budget, greedy group
//! assignment with CV-driven expansion, and the volume-count availability
//! identity.

mod availability;
mod plan;
mod score;

pub use availability::{system_failure_probability, volume_failure_probability, AvailabilityParams};
pub use plan::{initial_kft_count, plan, GroupRole, KftBudget, PlacementGroup, PlacementPlan, WAL_MEMBER};
pub use score::{coefficient_of_variation, normalize, score, ScoreParams};
