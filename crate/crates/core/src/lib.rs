// SPDX-License-Identifier: Apache-2.0

//! Deterministic discrete-event simulation of Linux buffered-I/O writeback
//! over cloud block storage, with a multi-volume data placement planner.
//!
//! The crate is organised bottom-up:
//!
//! - [`storage`]: device latency, QoS token buckets and burst credits.
//! - [`writeback`]: page cache, dirty throttling, flushers, blk-mq queues
//!   and request merging.
//! - [`workload`]: fio-style jobs and an abstract OLTP mix.
//! - [`placement`]: object scoring, the greedy group planner and the
//!   availability identity.
//! - [`sim`]: the event loop tying these together, plus metrics.
//! - [`config`]: scenario, stats and plan files; report writers.

pub mod config;
pub mod error;
pub mod placement;
pub mod profiles;
pub mod sim;
pub mod storage;
pub mod units;
pub mod workload;
pub mod writeback;

pub use error::{Error, Result};
pub use placement::{plan, PlacementPlan, ScoreParams};
pub use sim::{compare, run, MetricsReport, Scenario};
pub use storage::{DeviceProfile, IoCommand, IoKind, Origin};
pub use units::{ByteSize, SimDuration, SimTime};
pub use workload::{FioJob, OltpMix, TableSpec};
