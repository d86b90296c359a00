// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::storage::{sim_rng, AccessPattern, IoKind, SimRng};
use crate::units::{ByteSize, GIB, KIB};

use super::stream_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FioMode {
    Buffered,
    Direct,
}

/// A fio job: `threads` closed-loop issuers against one file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FioJob {
    pub pattern: AccessPattern,
    pub kind: IoKind,
    #[serde(default = "default_io_size")]
    pub io_size: ByteSize,
    #[serde(default = "default_threads")]
    pub threads: u32,
    pub mode: FioMode,
    #[serde(default = "default_file_size")]
    pub target_file_size: ByteSize,
}

fn default_io_size() -> ByteSize {
    ByteSize(8 * KIB)
}

fn default_threads() -> u32 {
    1
}

fn default_file_size() -> ByteSize {
    ByteSize(100 * GIB)
}

impl FioJob {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.threads == 0 {
            errs.push("fio: threads must be >= 1".to_string());
        }
        if self.io_size.0 == 0 {
            errs.push("fio: io_size must be > 0".to_string());
        } else if self.target_file_size.0 < self.io_size.0 * self.threads.max(1) as u64 {
            errs.push("fio: target_file_size must hold at least one io_size per thread".to_string());
        }
        errs
    }

    /// Bytes of the file each sequential thread walks through.
    fn region(&self) -> u64 {
        let per = self.target_file_size.0 / self.threads as u64;
        per - per % self.io_size.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FioRequest {
    pub thread: u32,
    pub offset: u64,
    pub size: u64,
    pub kind: IoKind,
}

/// Per-thread request generator. Each thread owns its random stream, so a
/// thread's offsets do not depend on how the engine interleaves threads.
#[derive(Clone, Debug)]
pub struct FioStream {
    job: FioJob,
    rngs: Vec<SimRng>,
    cursors: Vec<u64>,
}

impl FioStream {
    pub fn new(job: &FioJob, seed: u64) -> Self {
        let region = job.region();
        FioStream {
            rngs: (0..job.threads)
                .map(|t| sim_rng(stream_seed(seed, t as u64)))
                .collect(),
            cursors: (0..job.threads as u64).map(|t| t * region).collect(),
            job: job.clone(),
        }
    }

    pub fn job(&self) -> &FioJob {
        &self.job
    }

    pub fn next(&mut self, thread: u32) -> FioRequest {
        let t = thread as usize;
        let size = self.job.io_size.0;
        let offset = match self.job.pattern {
            AccessPattern::Random => {
                let slots = self.job.target_file_size.0 / size;
                self.rngs[t].random_range(0..slots) * size
            }
            AccessPattern::Sequential => {
                let region = self.job.region();
                let base = thread as u64 * region;
                let off = self.cursors[t];
                let next = off + size;
                self.cursors[t] = if next >= base + region { base } else { next };
                off
            }
        };
        FioRequest {
            thread,
            offset,
            size,
            kind: self.job.kind,
        }
    }
}

/// The job's requests with threads interleaved round-robin.
pub fn fio_events(job: &FioJob, seed: u64) -> impl Iterator<Item = FioRequest> {
    let mut stream = FioStream::new(job, seed);
    let threads = job.threads;
    (0u64..).map(move |i| stream.next((i % threads as u64) as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(pattern: AccessPattern, threads: u32) -> FioJob {
        FioJob {
            pattern,
            kind: IoKind::Write,
            io_size: ByteSize(8 * KIB),
            threads,
            mode: FioMode::Direct,
            target_file_size: ByteSize(GIB),
        }
    }

    #[test]
    fn sequential_single_thread_walks_forward() {
        let offs: Vec<u64> = fio_events(&job(AccessPattern::Sequential, 1), 7)
            .take(4)
            .map(|r| r.offset)
            .collect();
        assert_eq!(offs, vec![0, 8192, 16384, 24576]);
    }

    #[test]
    fn sequential_threads_use_disjoint_regions() {
        let reqs: Vec<FioRequest> = fio_events(&job(AccessPattern::Sequential, 4), 7).take(8).collect();
        assert_eq!(reqs[1].offset, GIB / 4);
        assert_eq!(reqs[5].offset, GIB / 4 + 8192);
    }

    #[test]
    fn random_is_seed_deterministic_and_aligned() {
        let a: Vec<u64> = fio_events(&job(AccessPattern::Random, 2), 42).take(500).map(|r| r.offset).collect();
        let b: Vec<u64> = fio_events(&job(AccessPattern::Random, 2), 42).take(500).map(|r| r.offset).collect();
        let c: Vec<u64> = fio_events(&job(AccessPattern::Random, 2), 43).take(500).map(|r| r.offset).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|o| o % 8192 == 0 && *o < GIB));
    }

    #[test]
    fn sequential_wraps_inside_region() {
        let mut j = job(AccessPattern::Sequential, 1);
        j.target_file_size = ByteSize(3 * 8192);
        let offs: Vec<u64> = fio_events(&j, 0).take(5).map(|r| r.offset).collect();
        assert_eq!(offs, vec![0, 8192, 16384, 0, 8192]);
    }
}
