// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::sim::MetricsReport;
use crate::storage::{sim_rng, Origin, SimRng};
use crate::units::{secs, ByteSize, SimDuration, GIB, KIB};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WritePattern {
    /// Pages are dirtied uniformly over the object.
    #[default]
    Random,
    /// Pages are dirtied at a cursor that advances one page per write, like
    /// an insert-only history table.
    Append,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    #[default]
    Table,
    Index,
}

/// One table or index with its access statistics under the reference load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub name: String,
    #[serde(default)]
    pub kind: ObjectKind,
    /// Page writes per second.
    pub write_freq: f64,
    /// Page reads per second.
    pub read_freq: f64,
    pub size: ByteSize,
    #[serde(default = "default_page")]
    pub page_size: ByteSize,
    #[serde(default)]
    pub write_pattern: WritePattern,
}

fn default_page() -> ByteSize {
    ByteSize(8 * KIB)
}

impl TableSpec {
    pub fn new(name: &str, write_freq: f64, read_freq: f64, size: u64) -> Self {
        TableSpec {
            name: name.to_string(),
            kind: ObjectKind::Table,
            write_freq,
            read_freq,
            size: ByteSize(size),
            page_size: default_page(),
            write_pattern: WritePattern::Random,
        }
    }

    pub fn origin(&self) -> Origin {
        match self.kind {
            ObjectKind::Table => Origin::Table,
            ObjectKind::Index => Origin::Index,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let n = &self.name;
        if n.is_empty() {
            errs.push("table: name must not be empty".to_string());
        }
        if !(self.write_freq >= 0.0 && self.write_freq.is_finite()) {
            errs.push(format!("table {n}: write_freq must be >= 0"));
        }
        if !(self.read_freq >= 0.0 && self.read_freq.is_finite()) {
            errs.push(format!("table {n}: read_freq must be >= 0"));
        }
        if self.page_size.0 == 0 {
            errs.push(format!("table {n}: page_size must be > 0"));
        } else if self.size.0 < self.page_size.0 {
            errs.push(format!("table {n}: size must hold at least one page"));
        }
        errs
    }

    fn pages(&self) -> u64 {
        self.size.0 / self.page_size.0
    }
}

/// An abstract OLTP load: each transaction reads and dirties table pages at
/// rates proportional to the tables' frequencies, appends to the WAL and
/// commits with an fsync of the WAL.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OltpMix {
    #[serde(default)]
    pub name: String,
    pub tables: Vec<TableSpec>,
    /// Offered transactions per second across all clients.
    pub commit_rate: f64,
    #[serde(default = "default_clients")]
    pub clients: u32,
    #[serde(default = "default_page")]
    pub wal_bytes_per_txn: ByteSize,
    #[serde(default = "default_page")]
    pub wal_page_size: ByteSize,
    #[serde(default = "default_segment")]
    pub wal_segment_size: ByteSize,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_interval_s: f64,
}

fn default_clients() -> u32 {
    100
}

fn default_segment() -> ByteSize {
    ByteSize(GIB)
}

fn default_checkpoint() -> f64 {
    300.0
}

impl OltpMix {
    pub fn validate(&self) -> Vec<String> {
        let mut errs: Vec<String> = self.tables.iter().flat_map(TableSpec::validate).collect();
        let mut names: Vec<&str> = self.tables.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        for w in names.windows(2) {
            if w[0] == w[1] {
                errs.push(format!("oltp: duplicate table name {}", w[0]));
            }
        }
        if !(self.commit_rate >= 0.0 && self.commit_rate.is_finite()) {
            errs.push("oltp: commit_rate must be >= 0".to_string());
        }
        if self.clients == 0 {
            errs.push("oltp: clients must be >= 1".to_string());
        }
        let page = self.wal_page_size.0;
        if page == 0 {
            errs.push("oltp: wal_page_size must be > 0".to_string());
        } else {
            if self.wal_bytes_per_txn.0 == 0 || !self.wal_bytes_per_txn.0.is_multiple_of(page) {
                errs.push("oltp: wal_bytes_per_txn must be a positive multiple of wal_page_size".to_string());
            }
            if self.wal_segment_size.0 < self.wal_bytes_per_txn.0 || !self.wal_segment_size.0.is_multiple_of(page) {
                errs.push(
                    "oltp: wal_segment_size must be a multiple of wal_page_size holding one transaction".to_string(),
                );
            }
        }
        if !(self.checkpoint_interval_s > 0.0 && self.checkpoint_interval_s.is_finite()) {
            errs.push("oltp: checkpoint_interval_s must be > 0".to_string());
        }
        errs
    }

    /// Expected pages each transaction dirties, per table.
    pub fn dirty_pages_per_txn(&self) -> Vec<f64> {
        self.per_txn(|t| t.write_freq)
    }

    pub fn reads_per_txn(&self) -> Vec<f64> {
        self.per_txn(|t| t.read_freq)
    }

    fn per_txn(&self, f: impl Fn(&TableSpec) -> f64) -> Vec<f64> {
        self.tables
            .iter()
            .map(|t| if self.commit_rate > 0.0 { f(t) / self.commit_rate } else { 0.0 })
            .collect()
    }

    /// Table bytes dirtied per second when the offered rate is sustained.
    pub fn expected_dirty_rate(&self) -> f64 {
        if self.commit_rate <= 0.0 {
            return 0.0;
        }
        self.tables
            .iter()
            .map(|t| t.write_freq * t.page_size.0 as f64)
            .sum()
    }

    pub fn checkpoint_interval(&self) -> SimDuration {
        secs(self.checkpoint_interval_s)
    }
}

/// Page-level work of one transaction, before any timing is applied.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TxnPlan {
    /// (table index, byte offset) of each page read, in issue order.
    pub reads: Vec<(usize, u64)>,
    /// (table index, byte offset) of each page written.
    pub writes: Vec<(usize, u64)>,
    pub wal_bytes: u64,
}

/// Draws transactions and client think times for a mix.
#[derive(Clone, Debug)]
pub struct OltpStream {
    mix: OltpMix,
    reads: Vec<Option<Poisson<f64>>>,
    writes: Vec<Option<Poisson<f64>>>,
    think: Option<Exp<f64>>,
    append_cursors: Vec<u64>,
    rng: SimRng,
}

fn poisson(lambda: f64) -> Option<Poisson<f64>> {
    (lambda > 0.0).then(|| Poisson::new(lambda).expect("validated rate"))
}

impl OltpStream {
    pub fn new(mix: &OltpMix, seed: u64) -> Self {
        let per_client = mix.commit_rate / mix.clients.max(1) as f64;
        OltpStream {
            reads: mix.reads_per_txn().into_iter().map(poisson).collect(),
            writes: mix.dirty_pages_per_txn().into_iter().map(poisson).collect(),
            think: (per_client > 0.0).then(|| Exp::new(per_client).expect("validated rate")),
            append_cursors: vec![0; mix.tables.len()],
            rng: sim_rng(seed),
            mix: mix.clone(),
        }
    }

    pub fn mix(&self) -> &OltpMix {
        &self.mix
    }

    /// Pause a client takes before starting its next transaction, or `None`
    /// when the mix offers no load.
    pub fn think_time(&mut self) -> Option<SimDuration> {
        let exp = self.think?;
        Some(secs(exp.sample(&mut self.rng)))
    }

    pub fn next_txn(&mut self) -> TxnPlan {
        let mut plan = TxnPlan {
            wal_bytes: self.mix.wal_bytes_per_txn.0,
            ..TxnPlan::default()
        };
        for (i, table) in self.mix.tables.iter().enumerate() {
            let page = table.page_size.0;
            if let Some(d) = &self.reads[i] {
                let n = d.sample(&mut self.rng) as u64;
                for _ in 0..n {
                    plan.reads.push((i, self.rng.random_range(0..table.pages()) * page));
                }
            }
            if let Some(d) = &self.writes[i] {
                let n = d.sample(&mut self.rng) as u64;
                for _ in 0..n {
                    let off = match table.write_pattern {
                        WritePattern::Random => self.rng.random_range(0..table.pages()) * page,
                        WritePattern::Append => {
                            let off = self.append_cursors[i];
                            self.append_cursors[i] = (off + page) % (table.pages() * page);
                            off
                        }
                    };
                    plan.writes.push((i, off));
                }
            }
        }
        plan
    }
}

/// The transactions a mix generates, in order. Empty when the mix offers no
/// load.
pub fn oltp_events(mix: &OltpMix, seed: u64) -> impl Iterator<Item = TxnPlan> {
    let mut stream = OltpStream::new(mix, seed);
    let active = mix.commit_rate > 0.0;
    std::iter::from_fn(move || active.then(|| stream.next_txn()))
}

/// Sequential log position; wraps to the start of the segment when the next
/// record would not fit.
#[derive(Clone, Debug)]
pub struct WalCursor {
    segment: u64,
    pos: u64,
}

impl WalCursor {
    pub fn new(segment_size: u64) -> Self {
        WalCursor {
            segment: segment_size,
            pos: 0,
        }
    }

    pub fn next(&mut self, bytes: u64) -> u64 {
        if self.pos + bytes > self.segment {
            self.pos = 0;
        }
        let off = self.pos;
        self.pos += bytes;
        off
    }
}

/// Committed transactions per simulated minute.
pub fn txn_rate_proxy(report: &MetricsReport) -> f64 {
    if report.duration_s <= 0.0 {
        return 0.0;
    }
    report.committed_txns as f64 / (report.duration_s / 60.0)
}
