// SPDX-License-Identifier: Apache-2.0

//! The kernel's buffered-write path: page-cache dirtying, dirty throttling,
//! per-device flusher threads, blk-mq style queues and request merging.

mod flusher;
mod page_cache;
mod queue;
mod throttle;

pub use flusher::{FlusherParams, FlusherState};
pub use page_cache::{FileId, PageCacheState};
pub use queue::{enqueue, queue_count, IoQueue, Merged};
pub use throttle::{throttle_delay, ThrottleParams};
