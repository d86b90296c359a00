// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::units::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FileId(pub usize);

#[derive(Clone, Debug, Default)]
struct FileCache {
    device: usize,
    /// Disjoint, non-adjacent dirty byte ranges: start -> end.
    extents: BTreeMap<u64, u64>,
    dirty: u64,
    writeback: u64,
    /// When the file last went from clean to dirty, with a tiebreak sequence.
    dirtied_at: Option<(SimTime, u64)>,
}

/// Dirty and under-writeback byte accounting for every file in a world.
///
/// Bytes move dirty -> writeback when a flusher or fsync submits them, and
/// leave writeback when the device completes the command. Throttling counts
/// both states, as the kernel does.
#[derive(Clone, Debug)]
pub struct PageCacheState {
    files: Vec<FileCache>,
    dirty_per_device: Vec<u64>,
    writeback_per_device: Vec<u64>,
    total_dirty: u64,
    total_writeback: u64,
    total_memory: u64,
    bytes_dirtied: u64,
    bytes_flushed: u64,
    seq: u64,
}

impl PageCacheState {
    pub fn new(total_memory: u64, devices: usize) -> Self {
        PageCacheState {
            files: Vec::new(),
            dirty_per_device: vec![0; devices],
            writeback_per_device: vec![0; devices],
            total_dirty: 0,
            total_writeback: 0,
            total_memory,
            bytes_dirtied: 0,
            bytes_flushed: 0,
            seq: 0,
        }
    }

    pub fn add_file(&mut self, device: usize) -> FileId {
        self.files.push(FileCache {
            device,
            ..FileCache::default()
        });
        FileId(self.files.len() - 1)
    }

    pub fn device_of(&self, file: FileId) -> usize {
        self.files[file.0].device
    }

    pub fn total_memory(&self) -> u64 {
        self.total_memory
    }

    pub fn total_dirty_bytes(&self) -> u64 {
        self.total_dirty
    }

    pub fn total_writeback_bytes(&self) -> u64 {
        self.total_writeback
    }

    pub fn dirty_bytes_on(&self, device: usize) -> u64 {
        self.dirty_per_device[device]
    }

    pub fn writeback_bytes_on(&self, device: usize) -> u64 {
        self.writeback_per_device[device]
    }

    pub fn file_dirty_bytes(&self, file: FileId) -> u64 {
        self.files[file.0].dirty
    }

    pub fn file_writeback_bytes(&self, file: FileId) -> u64 {
        self.files[file.0].writeback
    }

    /// Fraction of memory that is dirty or under writeback.
    pub fn dirty_ratio(&self) -> f64 {
        if self.total_memory == 0 {
            return 0.0;
        }
        (self.total_dirty + self.total_writeback) as f64 / self.total_memory as f64
    }

    /// Every byte that ever went from clean to dirty.
    pub fn bytes_dirtied(&self) -> u64 {
        self.bytes_dirtied
    }

    /// Bytes whose writeback has completed.
    pub fn bytes_flushed(&self) -> u64 {
        self.bytes_flushed
    }

    /// Bytes dirtied but not yet persisted: still dirty or in flight.
    pub fn residual_bytes(&self) -> u64 {
        self.total_dirty + self.total_writeback
    }

    pub fn extents(&self, file: FileId) -> Vec<(u64, u64)> {
        self.files[file.0]
            .extents
            .iter()
            .map(|(&s, &e)| (s, e - s))
            .collect()
    }

    /// Marks `[offset, offset + size)` dirty, coalescing with overlapping or
    /// adjacent extents. Returns the number of newly dirty bytes.
    pub fn insert(&mut self, file: FileId, offset: u64, size: u64, now: SimTime) -> u64 {
        if size == 0 {
            return 0;
        }
        let f = &mut self.files[file.0];
        let mut start = offset;
        let mut end = offset + size;
        let mut already = 0;

        // An extent starting at or before `start` that reaches it.
        if let Some((&s, &e)) = f.extents.range(..=start).next_back() {
            if e >= start {
                already += e.min(end).saturating_sub(offset);
                start = s;
                end = end.max(e);
                f.extents.remove(&s);
            }
        }
        // Extents beginning inside or right after the new range.
        while let Some((&s, &e)) = f.extents.range(start..=end).next() {
            already += e.min(offset + size).saturating_sub(s.max(offset));
            end = end.max(e);
            f.extents.remove(&s);
        }
        f.extents.insert(start, end);

        let added = size - already;
        if f.dirty == 0 && added > 0 {
            self.seq += 1;
            f.dirtied_at = Some((now, self.seq));
        }
        f.dirty += added;
        self.dirty_per_device[f.device] += added;
        self.total_dirty += added;
        self.bytes_dirtied += added;
        added
    }

    fn move_to_writeback(&mut self, file: FileId, bytes: u64) {
        let f = &mut self.files[file.0];
        f.dirty -= bytes;
        f.writeback += bytes;
        if f.dirty == 0 {
            f.dirtied_at = None;
        }
        self.dirty_per_device[f.device] -= bytes;
        self.writeback_per_device[f.device] += bytes;
        self.total_dirty -= bytes;
        self.total_writeback += bytes;
    }

    /// Takes up to `max_bytes` from the lowest dirty extent of `file` and puts
    /// it under writeback.
    pub fn take_run(&mut self, file: FileId, max_bytes: u64) -> Option<(u64, u64)> {
        let f = &mut self.files[file.0];
        let (&s, &e) = f.extents.iter().next()?;
        let len = (e - s).min(max_bytes);
        f.extents.remove(&s);
        if s + len < e {
            f.extents.insert(s + len, e);
        }
        self.move_to_writeback(file, len);
        Some((s, len))
    }

    /// Puts every dirty extent of `file` under writeback.
    pub fn take_file(&mut self, file: FileId) -> Vec<(u64, u64)> {
        let f = &mut self.files[file.0];
        let runs: Vec<(u64, u64)> = std::mem::take(&mut f.extents)
            .into_iter()
            .map(|(s, e)| (s, e - s))
            .collect();
        let bytes = runs.iter().map(|r| r.1).sum();
        self.move_to_writeback(file, bytes);
        runs
    }

    pub fn complete_writeback(&mut self, file: FileId, bytes: u64) {
        let f = &mut self.files[file.0];
        f.writeback -= bytes;
        self.writeback_per_device[f.device] -= bytes;
        self.total_writeback -= bytes;
        self.bytes_flushed += bytes;
    }

    /// The file on `device` that has been dirty the longest.
    pub fn oldest_dirty_file(&self, device: usize) -> Option<FileId> {
        self.files
            .iter()
            .enumerate()
            .filter(|(_, f)| f.device == device && f.dirty > 0)
            .min_by_key(|(_, f)| f.dirtied_at)
            .map(|(i, _)| FileId(i))
    }

    pub fn files_on(&self, device: usize) -> impl Iterator<Item = FileId> + '_ {
        self.files
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.device == device)
            .map(|(i, _)| FileId(i))
    }

    /// Checks the accounting identities; used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut dev_dirty = vec![0u64; self.dirty_per_device.len()];
        let mut dev_wb = vec![0u64; self.dirty_per_device.len()];
        for (i, f) in self.files.iter().enumerate() {
            let mut prev_end = None;
            let mut sum = 0;
            for (&s, &e) in &f.extents {
                if e <= s {
                    return Err(format!("file {i}: empty extent at {s}"));
                }
                if let Some(pe) = prev_end {
                    if s <= pe {
                        return Err(format!("file {i}: extents touch or overlap at {s}"));
                    }
                }
                prev_end = Some(e);
                sum += e - s;
            }
            if sum != f.dirty {
                return Err(format!("file {i}: extents hold {sum} bytes, counter says {}", f.dirty));
            }
            dev_dirty[f.device] += f.dirty;
            dev_wb[f.device] += f.writeback;
        }
        if dev_dirty != self.dirty_per_device || dev_wb != self.writeback_per_device {
            return Err("per-device counters disagree with files".into());
        }
        if self.total_dirty != dev_dirty.iter().sum::<u64>()
            || self.total_writeback != dev_wb.iter().sum::<u64>()
        {
            return Err("global counters disagree with devices".into());
        }
        if self.bytes_dirtied != self.bytes_flushed + self.residual_bytes() {
            return Err(format!(
                "conservation: dirtied {} != flushed {} + residual {}",
                self.bytes_dirtied,
                self.bytes_flushed,
                self.residual_bytes()
            ));
        }
        Ok(())
    }
}
