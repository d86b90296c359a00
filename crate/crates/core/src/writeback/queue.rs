// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use crate::storage::{IoCommand, IoKind};

/// Number of blk-mq queues the kernel sets up for a device.
pub fn queue_count(vcpus: u32, hw_queue_count: u32) -> u32 {
    vcpus.min(hw_queue_count).max(1)
}

#[derive(Clone, Debug)]
struct Entry<T> {
    cmd: IoCommand,
    tokens: Vec<T>,
    ctx: u32,
}

/// A command taken off a queue together with the caller tokens of every
/// request folded into it, in address order.
#[derive(Clone, Debug, PartialEq)]
pub struct Merged<T> {
    pub cmd: IoCommand,
    pub tokens: Vec<T>,
}

/// One blk-mq hardware queue under the `none` scheduler. Each submitting
/// vCPU has its own software queue, kept in arrival order; dispatch takes
/// the software queues round-robin and folds contiguous same-kind requests
/// into the head.
///
/// `T` is an opaque per-request token the caller uses to route completions.
#[derive(Clone, Debug)]
pub struct IoQueue<T> {
    pub device: usize,
    pub queue_index: usize,
    pending: BTreeMap<u64, Entry<T>>,
    by_start: BTreeSet<(IoKind, u64, u64)>,
    by_end: BTreeSet<(IoKind, u64, u64)>,
    ctxs: BTreeMap<u32, BTreeSet<u64>>,
    cursor: u32,
    next_seq: u64,
}

impl<T> IoQueue<T> {
    pub fn new(device: usize, queue_index: usize) -> Self {
        IoQueue {
            device,
            queue_index,
            pending: BTreeMap::new(),
            by_start: BTreeSet::new(),
            by_end: BTreeSet::new(),
            ctxs: BTreeMap::new(),
            cursor: 0,
            next_seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn push(&mut self, cmd: IoCommand, token: T) {
        self.push_from(cmd, token, 0);
    }

    /// Appends to the software queue of `ctx`, the submitting vCPU.
    pub fn push_from(&mut self, cmd: IoCommand, token: T, ctx: u32) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.by_start.insert((cmd.kind, cmd.offset, seq));
        self.by_end.insert((cmd.kind, cmd.end(), seq));
        self.ctxs.entry(ctx).or_default().insert(seq);
        self.pending.insert(seq, Entry { cmd, tokens: vec![token], ctx });
    }

    /// Pending commands in arrival order.
    pub fn iter(&self) -> impl Iterator<Item = &IoCommand> {
        self.pending.values().map(|e| &e.cmd)
    }

    fn remove(&mut self, seq: u64) -> Entry<T> {
        let e = self.pending.remove(&seq).expect("indexed entry is pending");
        self.by_start.remove(&(e.cmd.kind, e.cmd.offset, seq));
        self.by_end.remove(&(e.cmd.kind, e.cmd.end(), seq));
        let set = self.ctxs.get_mut(&e.ctx).expect("entry has a software queue");
        set.remove(&seq);
        if set.is_empty() {
            self.ctxs.remove(&e.ctx);
        }
        e
    }

    /// Oldest request of the next non-empty software queue at or after the
    /// round-robin cursor.
    fn next_head(&mut self) -> Option<u64> {
        let (&ctx, set) = self
            .ctxs
            .range(self.cursor..)
            .next()
            .or_else(|| self.ctxs.iter().next())?;
        let seq = *set.first().expect("empty software queues are dropped");
        self.cursor = ctx.wrapping_add(1);
        Some(seq)
    }

    /// Earliest-arrived pending command of `kind` covering exactly `key`
    /// in the given index.
    fn find(index: &BTreeSet<(IoKind, u64, u64)>, kind: IoKind, key: u64) -> Option<u64> {
        index
            .range((kind, key, 0)..=(kind, key, u64::MAX))
            .next()
            .map(|&(_, _, seq)| seq)
    }

    /// Takes the head command, first folding in every pending same-kind
    /// command contiguous with the growing range, as long as the result stays
    /// within `max_merged_size`.
    pub fn try_merge(&mut self, max_merged_size: u64) -> Option<Merged<T>> {
        let head_seq = self.next_head()?;
        let Entry { mut cmd, mut tokens, .. } = self.remove(head_seq);
        loop {
            let mut grew = false;
            if let Some(seq) = Self::find(&self.by_end, cmd.kind, cmd.offset) {
                if cmd.size + self.pending[&seq].cmd.size <= max_merged_size {
                    let e = self.remove(seq);
                    cmd.offset = e.cmd.offset;
                    cmd.size += e.cmd.size;
                    cmd.merged_count += e.cmd.merged_count;
                    let mut front = e.tokens;
                    front.append(&mut tokens);
                    tokens = front;
                    grew = true;
                }
            }
            if let Some(seq) = Self::find(&self.by_start, cmd.kind, cmd.end()) {
                if cmd.size + self.pending[&seq].cmd.size <= max_merged_size {
                    let mut e = self.remove(seq);
                    cmd.size += e.cmd.size;
                    cmd.merged_count += e.cmd.merged_count;
                    tokens.append(&mut e.tokens);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        Some(Merged { cmd, tokens })
    }
}

/// Appends `cmd` to the queue serving `issuing_vcpu` and returns that queue's
/// index.
pub fn enqueue<T>(queues: &mut [IoQueue<T>], cmd: IoCommand, token: T, issuing_vcpu: u32) -> usize {
    let idx = issuing_vcpu as usize % queues.len();
    queues[idx].push_from(cmd, token, issuing_vcpu);
    idx
}
