// SPDX-License-Identifier: Apache-2.0

//! The discrete-event world: devices, queues, page cache, flushers and
//! workload drivers advanced by one (time, sequence) ordered event heap.

mod engine;
mod metrics;
mod raid;
mod scenario;

pub use engine::{run, DeviceCounters, World};
pub use metrics::{
    compare, ComparisonRow, DeviceMetrics, DirtySummary, LatencySummary, MemberMetrics, MetricsReport, TimelinePoint,
};
pub use raid::{coalesce_pieces, raid0_map, RaidLayout, StripePiece};
pub use scenario::{
    DeviceSpec, FileLayout, LogicalDevice, Placement, RaidGroup, Scenario, Topology, Workload, FIO_OBJECT, WAL_OBJECT,
};

#[cfg(test)]
mod tests;
