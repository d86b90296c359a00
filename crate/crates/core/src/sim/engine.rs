// SPDX-License-Identifier: Apache-2.0

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::storage::{service_time_loaded, sim_rng, DeviceProfile, IoCommand, IoKind, Origin, QosState, SimRng};
use crate::units::{mb_per_sec, SimDuration, SimTime, US_PER_SEC};
use crate::workload::{FioJob, FioMode, FioStream, OltpStream, TxnPlan, WalCursor};
use crate::writeback::{enqueue, queue_count, throttle_delay, FileId, FlusherState, IoQueue, Merged, PageCacheState};

use super::metrics::{DeviceMetrics, DirtySummary, LatencySummary, MemberMetrics, MetricsReport, TimelinePoint};
use super::raid::{coalesce_pieces, raid0_map, RaidLayout};
use super::scenario::{FileLayout, Scenario, Topology, Workload, FIO_OBJECT, WAL_OBJECT};

/// Floor on the cost of one buffered write call, so a writer that is never
/// throttled still advances in time.
const SYSCALL_US: SimDuration = 1;

const SAMPLE_INTERVAL: SimDuration = US_PER_SEC;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    ServiceStart(u64),
    Complete(u64),
    FlusherWake(usize),
    FioIssue(u32),
    ClientStart(u32),
    ClientWal(u32),
    ClientFsync(u32),
    Checkpoint,
    Sample,
}

struct Phys {
    name: String,
    profile: DeviceProfile,
    qos: QosState,
    rng: SimRng,
    in_flight: u32,
    commands: u64,
    bytes: u64,
    qos_wait: u64,
    residence: u64,
}

struct LDev {
    name: String,
    members: Vec<usize>,
    layout: Option<RaidLayout>,
    queues: Vec<IoQueue<u64>>,
    busy: Vec<u32>,
    tags: u32,
    flusher: FlusherState,
    requests: u64,
    commands: u64,
    bytes_written: u64,
    bytes_read: u64,
    qos_wait: u64,
    residence: u64,
    depth: u64,
    depth_area: u128,
    depth_since: SimTime,
    interval_bytes: u64,
}

struct LCmd {
    ldev: usize,
    queue: usize,
    kind: IoKind,
    size: u64,
    tokens: Vec<u64>,
    parts_left: usize,
}

struct Part {
    phys: usize,
    lcmd: u64,
    size: u64,
    dispatched: SimTime,
    started: SimTime,
}

#[derive(Clone, Copy, Debug)]
enum Owner {
    Fio(u32),
    Flush { ldev: usize, file: FileId, bytes: u64 },
    Fsync { file: FileId, bytes: u64 },
    Read(u32),
}

struct Sub {
    owner: Owner,
    left: usize,
}

#[derive(Clone, Copy, Debug)]
enum Waiter {
    Client(u32),
    Checkpoint,
    Probe(u64),
}

struct FsyncFlush {
    waiters: Vec<(Waiter, u32)>,
    own_pending: bool,
}

#[derive(Default)]
struct FsyncState {
    active: Option<FsyncFlush>,
    waiting: Vec<(Waiter, u32)>,
}

struct Client {
    vcpu: u32,
    plan: TxnPlan,
    next_read: usize,
    start: SimTime,
}

struct FioDriver {
    job: FioJob,
    stream: FioStream,
    file: FileId,
}

struct OltpDriver {
    stream: OltpStream,
    clients: Vec<Client>,
    wal: FileId,
    /// File of each table, in mix order.
    tables: Vec<FileId>,
    page_sizes: Vec<u64>,
    wal_cursor: WalCursor,
    /// Table files in name order, fsynced one after another at checkpoints.
    checkpoint_order: Vec<FileId>,
    checkpoint_at: Option<usize>,
}

enum Driver {
    Idle,
    Fio(FioDriver),
    Oltp(Box<OltpDriver>),
}

/// One simulated host: devices, page cache, flushers and the workload
/// driving them.
pub struct World {
    sc: Scenario,
    files: Vec<FileLayout>,
    now: SimTime,
    end: SimTime,
    seq: u64,
    heap: BinaryHeap<Reverse<(SimTime, u64, Ev)>>,
    phys: Vec<Phys>,
    ldevs: Vec<LDev>,
    cache: PageCacheState,
    subs: BTreeMap<u64, Sub>,
    next_sub: u64,
    lcmds: BTreeMap<u64, LCmd>,
    next_lcmd: u64,
    parts: BTreeMap<u64, Part>,
    next_part: u64,
    fsyncs: Vec<FsyncState>,
    driver: Driver,
    probes: BTreeMap<u64, SimTime>,
    next_probe: u64,
    events: u64,
    app_bytes: u64,
    interval_app_bytes: u64,
    committed: u64,
    interval_commits: u64,
    commit_latency: Vec<u64>,
    throttle_onset: Option<SimTime>,
    throttled_writes: u64,
    last_delay: SimDuration,
    peak_ratio: f64,
    timeline: Vec<TimelinePoint>,
    wal_offsets: Vec<u64>,
    record_wal: bool,
}

fn split_requests(offset: u64, len: u64, request: u64, out: &mut Vec<(u64, u64)>) {
    let mut pos = offset;
    let end = offset + len;
    while pos < end {
        let next = ((pos / request) + 1) * request;
        let stop = next.min(end);
        out.push((pos, stop - pos));
        pos = stop;
    }
}

impl World {
    pub fn new(scenario: &Scenario) -> Result<World> {
        let Topology { logical, files, .. } = scenario.topology().map_err(Error::Validation)?;
        let sc = scenario.clone();
        let phys: Vec<Phys> = sc
            .devices
            .iter()
            .enumerate()
            .map(|(i, d)| Phys {
                name: d.name.clone(),
                qos: QosState::new(&d.profile),
                rng: sim_rng(crate::workload::stream_seed(sc.seed, 1 << 32 | i as u64)),
                profile: d.profile.clone(),
                in_flight: 0,
                commands: 0,
                bytes: 0,
                qos_wait: 0,
                residence: 0,
            })
            .collect();
        let ldevs: Vec<LDev> = logical
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let first = &sc.devices[l.members[0]].profile;
                let nq = queue_count(sc.vcpus, first.hw_queue_count) as usize;
                LDev {
                    name: l.name.clone(),
                    members: l.members.clone(),
                    layout: l.chunk_size.map(|chunk_size| RaidLayout {
                        members: l.members.len(),
                        chunk_size,
                    }),
                    queues: (0..nq).map(|q| IoQueue::new(i, q)).collect(),
                    busy: vec![0; nq],
                    tags: first.queue_depth,
                    flusher: FlusherState::new(i, i as u32 % sc.vcpus, &sc.writeback),
                    requests: 0,
                    commands: 0,
                    bytes_written: 0,
                    bytes_read: 0,
                    qos_wait: 0,
                    residence: 0,
                    depth: 0,
                    depth_area: 0,
                    depth_since: 0,
                    interval_bytes: 0,
                }
            })
            .collect();
        let mut cache = PageCacheState::new(sc.memory, ldevs.len());
        for f in &files {
            cache.add_file(f.device);
        }
        let find = |name: &str| FileId(files.iter().position(|f| f.name == name).expect("laid out"));
        let driver = match &sc.workload {
            Workload::Fio(job) => Driver::Fio(FioDriver {
                job: job.clone(),
                stream: FioStream::new(job, sc.seed),
                file: find(FIO_OBJECT),
            }),
            Workload::Oltp(mix) => {
                let mut checkpoint_order: Vec<(&str, FileId)> =
                    mix.tables.iter().map(|t| (t.name.as_str(), find(&t.name))).collect();
                checkpoint_order.sort();
                Driver::Oltp(Box::new(OltpDriver {
                    stream: OltpStream::new(mix, sc.seed),
                    clients: Vec::new(),
                    wal: find(WAL_OBJECT),
                    tables: mix.tables.iter().map(|t| find(&t.name)).collect(),
                    page_sizes: mix.tables.iter().map(|t| t.page_size.0).collect(),
                    wal_cursor: WalCursor::new(mix.wal_segment_size.0),
                    checkpoint_order: checkpoint_order.into_iter().map(|(_, f)| f).collect(),
                    checkpoint_at: None,
                }))
            }
        };
        Ok(World {
            end: sc.duration(),
            fsyncs: files.iter().map(|_| FsyncState::default()).collect(),
            files,
            now: 0,
            seq: 0,
            heap: BinaryHeap::new(),
            phys,
            ldevs,
            cache,
            subs: BTreeMap::new(),
            next_sub: 0,
            lcmds: BTreeMap::new(),
            next_lcmd: 0,
            parts: BTreeMap::new(),
            next_part: 0,
            driver,
            probes: BTreeMap::new(),
            next_probe: 0,
            events: 0,
            app_bytes: 0,
            interval_app_bytes: 0,
            committed: 0,
            interval_commits: 0,
            commit_latency: Vec::new(),
            throttle_onset: None,
            throttled_writes: 0,
            last_delay: 0,
            peak_ratio: 0.0,
            timeline: Vec::new(),
            wal_offsets: Vec::new(),
            record_wal: false,
            sc,
        })
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn cache(&self) -> &PageCacheState {
        &self.cache
    }

    pub fn file_id(&self, name: &str) -> Option<FileId> {
        self.files.iter().position(|f| f.name == name).map(FileId)
    }

    /// Keeps every WAL append offset for inspection.
    pub fn record_wal_offsets(&mut self) {
        self.record_wal = true;
    }

    pub fn wal_offsets(&self) -> &[u64] {
        &self.wal_offsets
    }

    fn schedule(&mut self, at: SimTime, ev: Ev) {
        debug_assert!(at >= self.now, "event {ev:?} scheduled in the past");
        self.seq += 1;
        self.heap.push(Reverse((at, self.seq, ev)));
    }

    fn after(&mut self, delay: SimDuration, ev: Ev) {
        self.schedule(self.now + delay, ev);
    }

    fn vcpus(&self) -> u32 {
        self.sc.vcpus
    }

    /// Arms the periodic timers and the workload.
    fn start(&mut self) {
        for l in 0..self.ldevs.len() {
            let at = self.ldevs[l].flusher.next_wakeup;
            self.schedule(at, Ev::FlusherWake(l));
        }
        self.schedule(SAMPLE_INTERVAL, Ev::Sample);
        let vcpus = self.vcpus();
        match &mut self.driver {
            Driver::Idle => {}
            Driver::Fio(d) => {
                for t in 0..d.job.threads {
                    self.schedule(0, Ev::FioIssue(t));
                }
            }
            Driver::Oltp(d) => {
                let n = d.stream.mix().clients;
                let interval = d.stream.mix().checkpoint_interval();
                let mut starts = Vec::new();
                for c in 0..n {
                    d.clients.push(Client {
                        vcpu: c % vcpus,
                        plan: TxnPlan::default(),
                        next_read: 0,
                        start: 0,
                    });
                    if let Some(t) = d.stream.think_time() {
                        starts.push((t, c));
                    }
                }
                let active = !starts.is_empty();
                for (t, c) in starts {
                    self.schedule(t, Ev::ClientStart(c));
                }
                if active {
                    self.schedule(interval, Ev::Checkpoint);
                }
            }
        }
    }

    fn step(&mut self, limit: SimTime) -> bool {
        let Some(&Reverse((t, _, ev))) = self.heap.peek() else {
            return false;
        };
        if t >= limit {
            return false;
        }
        self.heap.pop();
        self.now = t;
        self.events += 1;
        self.handle(ev);
        true
    }

    fn handle(&mut self, ev: Ev) {
        match ev {
            Ev::ServiceStart(p) => self.service_start(p),
            Ev::Complete(p) => self.part_complete(p),
            Ev::FlusherWake(l) => {
                self.ldevs[l].flusher.tick(self.now);
                self.flusher_continue(l);
                let at = self.ldevs[l].flusher.next_wakeup;
                self.schedule(at, Ev::FlusherWake(l));
            }
            Ev::FioIssue(t) => self.fio_issue(t),
            Ev::ClientStart(c) => self.client_start(c),
            Ev::ClientWal(c) => self.client_wal(c),
            Ev::ClientFsync(c) => self.client_fsync(c),
            Ev::Checkpoint => self.checkpoint(),
            Ev::Sample => {
                self.sample();
                self.after(SAMPLE_INTERVAL, Ev::Sample);
            }
        }
    }

    // ---- block layer ------------------------------------------------------

    fn depth_change(&mut self, l: usize, delta: i64) {
        let ld = &mut self.ldevs[l];
        ld.depth_area += ld.depth as u128 * (self.now - ld.depth_since) as u128;
        ld.depth_since = self.now;
        ld.depth = (ld.depth as i64 + delta) as u64;
    }

    /// Hands a batch of requests to the queue serving `vcpu`, then lets the
    /// queue dispatch. Returns the submission id.
    fn submit(&mut self, l: usize, vcpu: u32, reqs: Vec<(u64, u64)>, kind: IoKind, origin: Origin, owner: Owner) -> u64 {
        assert!(!reqs.is_empty(), "empty submission");
        let id = self.next_sub;
        self.next_sub += 1;
        let n = reqs.len();
        self.subs.insert(id, Sub { owner, left: n });
        let now = self.now;
        let mut q = 0;
        for (off, size) in reqs {
            let cmd = IoCommand::new(l, off, size, kind, origin, now);
            q = enqueue(&mut self.ldevs[l].queues, cmd, id, vcpu);
        }
        self.kick(l, q);
        id
    }

    fn kick(&mut self, l: usize, q: usize) {
        let max = self.sc.writeback.max_merged_size.0;
        loop {
            let ld = &mut self.ldevs[l];
            if ld.busy[q] >= ld.tags {
                break;
            }
            let Some(m) = ld.queues[q].try_merge(max) else {
                break;
            };
            ld.busy[q] += 1;
            self.dispatch(l, q, m);
        }
    }

    fn dispatch(&mut self, l: usize, q: usize, m: Merged<u64>) {
        self.depth_change(l, 1);
        let ld = &self.ldevs[l];
        let pieces: Vec<(usize, u64)> = match ld.layout {
            None => vec![(ld.members[0], m.cmd.size)],
            Some(layout) => coalesce_pieces(raid0_map(&layout, m.cmd.offset, m.cmd.size))
                .into_iter()
                .map(|p| (ld.members[p.member], p.size))
                .collect(),
        };
        let id = self.next_lcmd;
        self.next_lcmd += 1;
        self.lcmds.insert(
            id,
            LCmd {
                ldev: l,
                queue: q,
                kind: m.cmd.kind,
                size: m.cmd.size,
                tokens: m.tokens,
                parts_left: pieces.len(),
            },
        );
        for (phys, size) in pieces {
            let admit = self.phys[phys].qos.admit(size, self.now);
            let pid = self.next_part;
            self.next_part += 1;
            self.parts.insert(
                pid,
                Part {
                    phys,
                    lcmd: id,
                    size,
                    dispatched: self.now,
                    started: self.now,
                },
            );
            self.schedule(admit, Ev::ServiceStart(pid));
        }
    }

    fn service_start(&mut self, pid: u64) {
        let part = self.parts.get_mut(&pid).expect("live part");
        part.started = self.now;
        let ph = &mut self.phys[part.phys];
        ph.in_flight += 1;
        let st = service_time_loaded(&ph.profile, part.size, ph.in_flight, &mut ph.rng);
        self.after(st, Ev::Complete(pid));
    }

    fn part_complete(&mut self, pid: u64) {
        let part = self.parts.remove(&pid).expect("live part");
        let wait = part.started - part.dispatched;
        let residence = self.now - part.dispatched;
        let ph = &mut self.phys[part.phys];
        ph.in_flight -= 1;
        ph.commands += 1;
        ph.bytes += part.size;
        ph.qos_wait += wait;
        ph.residence += residence;
        let lc = self.lcmds.get_mut(&part.lcmd).expect("live command");
        lc.parts_left -= 1;
        let done = lc.parts_left == 0;
        let ld = &mut self.ldevs[lc.ldev];
        ld.qos_wait += wait;
        ld.residence += residence;
        if done {
            self.finish_command(part.lcmd);
        }
    }

    fn finish_command(&mut self, id: u64) {
        let lc = self.lcmds.remove(&id).expect("live command");
        let ld = &mut self.ldevs[lc.ldev];
        ld.commands += 1;
        ld.requests += lc.tokens.len() as u64;
        match lc.kind {
            IoKind::Write => ld.bytes_written += lc.size,
            IoKind::Read => ld.bytes_read += lc.size,
        }
        ld.interval_bytes += lc.size;
        ld.busy[lc.queue] -= 1;
        self.depth_change(lc.ldev, -1);
        for tok in lc.tokens {
            let sub = self.subs.get_mut(&tok).expect("live submission");
            sub.left -= 1;
            if sub.left == 0 {
                let owner = self.subs.remove(&tok).expect("live submission").owner;
                self.submission_done(owner);
            }
        }
        self.kick(lc.ldev, lc.queue);
    }

    fn submission_done(&mut self, owner: Owner) {
        match owner {
            Owner::Fio(t) => {
                let size = match &self.driver {
                    Driver::Fio(d) => d.job.io_size.0,
                    _ => unreachable!("fio completion without fio driver"),
                };
                self.app_bytes += size;
                self.interval_app_bytes += size;
                self.fio_issue(t);
            }
            Owner::Flush { ldev, file, bytes } => {
                self.cache.complete_writeback(file, bytes);
                self.ldevs[ldev].flusher.complete();
                self.fsync_check(file);
                self.flusher_continue(ldev);
            }
            Owner::Fsync { file, bytes } => {
                self.cache.complete_writeback(file, bytes);
                if let Some(a) = &mut self.fsyncs[file.0].active {
                    a.own_pending = false;
                }
                self.fsync_check(file);
            }
            Owner::Read(c) => self.client_continue(c),
        }
    }

    // ---- page cache, throttling and writeback ------------------------------

    /// Dirties a range and wakes the file's flusher once dirty memory is over
    /// the background threshold.
    fn dirty(&mut self, file: FileId, offset: u64, size: u64) {
        self.cache.insert(file, offset, size, self.now);
        let ratio = self.cache.dirty_ratio();
        self.peak_ratio = self.peak_ratio.max(ratio);
        if ratio > self.sc.throttle.background_ratio {
            let l = self.files[file.0].device;
            if self.ldevs[l].flusher.begin() {
                self.flusher_continue(l);
            }
        }
    }

    /// Pause the writer takes at the current dirty ratio.
    fn throttle_pause(&mut self) -> SimDuration {
        let delay = throttle_delay(&self.sc.throttle, self.cache.dirty_ratio());
        self.last_delay = delay;
        if delay > 0 {
            self.throttled_writes += 1;
            self.throttle_onset.get_or_insert(self.now);
        }
        delay
    }

    /// Copies `size` bytes into the page cache and returns when the write
    /// call returns to the caller.
    pub fn buffered_write(&mut self, file: FileId, offset: u64, size: u64) -> SimTime {
        self.dirty(file, offset, size);
        self.now + self.throttle_pause()
    }

    fn flusher_continue(&mut self, l: usize) {
        let max_run = self.sc.writeback.max_merged_size.0;
        let request = self.sc.writeback.request_size.0;
        for _ in 0..2 {
            let f = &mut self.ldevs[l].flusher;
            if f.in_flight.is_some() {
                return;
            }
            if let Some((file, off, len)) = f.next_run(&mut self.cache, max_run) {
                let vcpu = f.vcpu;
                let layout = &self.files[file.0];
                let mut reqs = Vec::new();
                split_requests(layout.base + off, len, request, &mut reqs);
                let origin = layout.origin;
                let owner = Owner::Flush { ldev: l, file, bytes: len };
                let sub = self.submit(l, vcpu, reqs, IoKind::Write, origin, owner);
                self.ldevs[l].flusher.in_flight = Some(sub);
                return;
            }
            // Back-to-back activations while dirty memory stays high.
            let busy = self.cache.dirty_ratio() > self.sc.throttle.background_ratio && self.cache.dirty_bytes_on(l) > 0;
            if !busy || !self.ldevs[l].flusher.begin() {
                return;
            }
        }
    }

    fn fsync(&mut self, file: FileId, waiter: Waiter, vcpu: u32) {
        if self.fsyncs[file.0].active.is_some() {
            self.fsyncs[file.0].waiting.push((waiter, vcpu));
        } else {
            self.start_fsync(file, vec![(waiter, vcpu)]);
        }
    }

    /// Writes out everything dirty in `file` as one batch; the flush is done
    /// once those requests and any writeback already in flight for the file
    /// have completed.
    fn start_fsync(&mut self, file: FileId, waiters: Vec<(Waiter, u32)>) {
        let vcpu = waiters[0].1;
        let runs = self.cache.take_file(file);
        let bytes: u64 = runs.iter().map(|r| r.1).sum();
        self.fsyncs[file.0].active = Some(FsyncFlush {
            waiters,
            own_pending: bytes > 0,
        });
        if bytes > 0 {
            let layout = &self.files[file.0];
            let request = self.sc.writeback.request_size.0;
            let mut reqs = Vec::new();
            for (off, len) in runs {
                split_requests(layout.base + off, len, request, &mut reqs);
            }
            let (l, origin) = (layout.device, layout.origin);
            self.submit(l, vcpu, reqs, IoKind::Write, origin, Owner::Fsync { file, bytes });
        } else {
            self.fsync_check(file);
        }
    }

    fn fsync_check(&mut self, file: FileId) {
        let Some(active) = &self.fsyncs[file.0].active else {
            return;
        };
        if active.own_pending || self.cache.file_writeback_bytes(file) > 0 {
            return;
        }
        let done = self.fsyncs[file.0].active.take().expect("checked above");
        let next = std::mem::take(&mut self.fsyncs[file.0].waiting);
        for (w, _) in done.waiters {
            self.fsync_done(w);
        }
        if !next.is_empty() {
            if self.fsyncs[file.0].active.is_some() {
                self.fsyncs[file.0].waiting.splice(0..0, next);
            } else {
                self.start_fsync(file, next);
            }
        }
    }

    fn fsync_done(&mut self, w: Waiter) {
        match w {
            Waiter::Client(c) => self.commit(c),
            Waiter::Checkpoint => self.checkpoint_next(),
            Waiter::Probe(id) => {
                self.probes.insert(id, self.now);
            }
        }
    }

    /// Issues an fsync and runs the world until it returns.
    pub fn fsync_blocking(&mut self, file: FileId) -> SimTime {
        let id = self.next_probe;
        self.next_probe += 1;
        self.fsync(file, Waiter::Probe(id), 0);
        while !self.probes.contains_key(&id) {
            if !self.step(SimTime::MAX) {
                panic!("fsync cannot complete: no pending events");
            }
        }
        self.probes[&id]
    }

    // ---- fio ---------------------------------------------------------------

    fn fio_issue(&mut self, t: u32) {
        let Driver::Fio(d) = &mut self.driver else {
            return;
        };
        let req = d.stream.next(t);
        let (file, mode) = (d.file, d.job.mode);
        let vcpu = t % self.sc.vcpus;
        let layout = &self.files[file.0];
        if mode == FioMode::Buffered && req.kind == IoKind::Write {
            let delay = self.buffered_write(file, req.offset, req.size) - self.now;
            self.app_bytes += req.size;
            self.interval_app_bytes += req.size;
            self.after(delay.max(SYSCALL_US), Ev::FioIssue(t));
        } else {
            // Reads bypass the page cache.
            let (l, off) = (layout.device, layout.base + req.offset);
            self.submit(l, vcpu, vec![(off, req.size)], req.kind, Origin::Raw, Owner::Fio(t));
        }
    }

    // ---- oltp --------------------------------------------------------------

    fn oltp(&mut self) -> &mut OltpDriver {
        match &mut self.driver {
            Driver::Oltp(d) => d,
            _ => unreachable!("oltp event without oltp driver"),
        }
    }

    fn client_start(&mut self, c: u32) {
        let now = self.now;
        let d = self.oltp();
        let plan = d.stream.next_txn();
        let cl = &mut d.clients[c as usize];
        cl.plan = plan;
        cl.next_read = 0;
        cl.start = now;
        self.client_continue(c);
    }

    /// Issues the client's next synchronous read, or once reads are done,
    /// dirties its table pages.
    fn client_continue(&mut self, c: u32) {
        let d = self.oltp();
        let cl = &mut d.clients[c as usize];
        if cl.next_read < cl.plan.reads.len() {
            let (t, off) = cl.plan.reads[cl.next_read];
            cl.next_read += 1;
            let vcpu = cl.vcpu;
            let (file, page) = (d.tables[t], d.page_sizes[t]);
            let layout = &self.files[file.0];
            let (l, origin, base) = (layout.device, layout.origin, layout.base);
            self.app_bytes += page;
            self.interval_app_bytes += page;
            self.submit(l, vcpu, vec![(base + off, page)], IoKind::Read, origin, Owner::Read(c));
            return;
        }
        let writes = std::mem::take(&mut cl.plan.writes);
        let targets: Vec<(FileId, u64, u64)> = writes
            .into_iter()
            .map(|(t, off)| (d.tables[t], off, d.page_sizes[t]))
            .collect();
        for (file, off, page) in targets {
            self.dirty(file, off, page);
            self.app_bytes += page;
            self.interval_app_bytes += page;
        }
        let delay = self.throttle_pause();
        if delay == 0 {
            self.client_wal(c);
        } else {
            self.after(delay, Ev::ClientWal(c));
        }
    }

    fn client_wal(&mut self, c: u32) {
        let d = self.oltp();
        let bytes = d.clients[c as usize].plan.wal_bytes;
        let off = d.wal_cursor.next(bytes);
        let wal = d.wal;
        if self.record_wal {
            self.wal_offsets.push(off);
        }
        self.dirty(wal, off, bytes);
        self.app_bytes += bytes;
        self.interval_app_bytes += bytes;
        let delay = self.throttle_pause();
        if delay == 0 {
            self.client_fsync(c);
        } else {
            self.after(delay, Ev::ClientFsync(c));
        }
    }

    fn client_fsync(&mut self, c: u32) {
        let d = self.oltp();
        let (wal, vcpu) = (d.wal, d.clients[c as usize].vcpu);
        self.fsync(wal, Waiter::Client(c), vcpu);
    }

    fn commit(&mut self, c: u32) {
        let now = self.now;
        let d = self.oltp();
        let latency = now - d.clients[c as usize].start;
        let think = d.stream.think_time().expect("clients run only under load");
        self.commit_latency.push(latency);
        self.committed += 1;
        self.interval_commits += 1;
        self.after(think, Ev::ClientStart(c));
    }

    fn checkpoint(&mut self) {
        let d = self.oltp();
        let interval = d.stream.mix().checkpoint_interval();
        if d.checkpoint_at.is_none() && !d.checkpoint_order.is_empty() {
            d.checkpoint_at = Some(0);
            let order = d.checkpoint_order.clone();
            let first = order[0];
            let mut devices: Vec<usize> = order.iter().map(|f| self.files[f.0].device).collect();
            devices.sort_unstable();
            devices.dedup();
            for l in devices {
                if self.ldevs[l].flusher.begin() {
                    self.flusher_continue(l);
                }
            }
            self.fsync(first, Waiter::Checkpoint, 0);
        }
        self.after(interval, Ev::Checkpoint);
    }

    fn checkpoint_next(&mut self) {
        let d = self.oltp();
        let next = d.checkpoint_at.map_or(0, |i| i + 1);
        if next < d.checkpoint_order.len() {
            d.checkpoint_at = Some(next);
            let file = d.checkpoint_order[next];
            self.fsync(file, Waiter::Checkpoint, 0);
        } else {
            d.checkpoint_at = None;
        }
    }

    // ---- reporting ---------------------------------------------------------

    fn sample(&mut self) {
        let since = self.timeline.last().map_or(0.0, |p| p.t_s);
        let span = self.now - (since * US_PER_SEC as f64).round() as SimTime;
        let point = TimelinePoint {
            t_s: self.now as f64 / US_PER_SEC as f64,
            dirty_bytes: self.cache.total_dirty_bytes(),
            writeback_bytes: self.cache.total_writeback_bytes(),
            dirty_ratio: self.cache.dirty_ratio(),
            throttle_delay_us: throttle_delay(&self.sc.throttle, self.cache.dirty_ratio()),
            commits: std::mem::take(&mut self.interval_commits),
            app_mb_s: mb_per_sec(std::mem::take(&mut self.interval_app_bytes), span),
            device_mb_s: self
                .ldevs
                .iter_mut()
                .map(|l| mb_per_sec(std::mem::take(&mut l.interval_bytes), span))
                .collect(),
        };
        self.timeline.push(point);
    }

    fn report(mut self, wall_clock_ms: f64) -> MetricsReport {
        self.now = self.end;
        if self.timeline.last().map_or(self.end > 0, |p| p.t_s * (US_PER_SEC as f64) < self.end as f64) {
            self.sample();
        }
        for l in 0..self.ldevs.len() {
            self.depth_change(l, 0);
        }
        let end = self.end;
        let share = |wait: u64, residence: u64| if residence > 0 { wait as f64 / residence as f64 } else { 0.0 };
        let devices = self
            .ldevs
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let bytes = l.bytes_written + l.bytes_read;
                DeviceMetrics {
                    name: l.name.clone(),
                    objects: self.files.iter().filter(|f| f.device == i).map(|f| f.name.clone()).collect(),
                    throughput_mb_s: mb_per_sec(bytes, end),
                    write_mb_s: mb_per_sec(l.bytes_written, end),
                    read_mb_s: mb_per_sec(l.bytes_read, end),
                    bytes_written: l.bytes_written,
                    bytes_read: l.bytes_read,
                    requests: l.requests,
                    commands: l.commands,
                    merge_rate_pct: if l.requests > 0 {
                        100.0 * (1.0 - l.commands as f64 / l.requests as f64)
                    } else {
                        0.0
                    },
                    mean_command_kb: if l.commands > 0 { bytes as f64 / l.commands as f64 / 1024.0 } else { 0.0 },
                    mean_queue_depth: if end > 0 { l.depth_area as f64 / end as f64 } else { 0.0 },
                    qos_wait_share: share(l.qos_wait, l.residence),
                    flusher_activations: l.flusher.activations(),
                    members: if l.layout.is_some() {
                        l.members
                            .iter()
                            .map(|&m| {
                                let p = &self.phys[m];
                                MemberMetrics {
                                    name: p.name.clone(),
                                    commands: p.commands,
                                    bytes: p.bytes,
                                    qos_wait_share: share(p.qos_wait, p.residence),
                                }
                            })
                            .collect()
                    } else {
                        Vec::new()
                    },
                }
            })
            .collect();
        let (workload, focus) = match &self.sc.workload {
            Workload::Fio(_) => ("fio", FIO_OBJECT),
            Workload::Oltp(_) => ("oltp", WAL_OBJECT),
        };
        let focus_device = self
            .files
            .iter()
            .find(|f| f.name == focus)
            .map(|f| self.ldevs[f.device].name.clone())
            .unwrap_or_default();
        let duration_s = end as f64 / US_PER_SEC as f64;
        let mut report = MetricsReport {
            scenario: self.sc.name.clone(),
            seed: self.sc.seed,
            duration_s,
            workload: workload.to_string(),
            app_bytes: self.app_bytes,
            throughput_mb_s: mb_per_sec(self.app_bytes, end),
            committed_txns: self.committed,
            txn_rate_proxy: 0.0,
            commit_latency: LatencySummary::from_micros(&mut self.commit_latency),
            focus_device,
            devices,
            dirty: DirtySummary {
                bytes_dirtied: self.cache.bytes_dirtied(),
                bytes_flushed: self.cache.bytes_flushed(),
                residual_bytes: self.cache.residual_bytes(),
                peak_dirty_ratio: self.peak_ratio,
                throttle_onset_s: self.throttle_onset.map(|t| t as f64 / US_PER_SEC as f64),
                throttled_writes: self.throttled_writes,
            },
            events: self.events,
            timeline: self.timeline,
            wall_clock_ms,
        };
        report.txn_rate_proxy = crate::workload::txn_rate_proxy(&report);
        report
    }
}

/// Runs a scenario to its duration.
pub fn run(scenario: &Scenario) -> Result<MetricsReport> {
    let started = Instant::now();
    let mut world = World::new(scenario)?;
    world.run_to_end();
    let elapsed = started.elapsed().as_secs_f64() * 1000.0;
    Ok(world.report(elapsed))
}

/// Completed-command counters of one logical device.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DeviceCounters {
    pub requests: u64,
    pub commands: u64,
    pub bytes_written: u64,
    pub bytes_read: u64,
}

impl World {
    /// A world with flusher timers armed but no workload attached, for
    /// driving page-cache operations by hand.
    pub fn idle(scenario: &Scenario) -> Result<World> {
        let mut w = World::new(scenario)?;
        w.driver = Driver::Idle;
        w.start();
        Ok(w)
    }

    /// Starts the workload and runs it for the scenario's duration.
    pub fn run_to_end(&mut self) {
        if self.end > 0 {
            self.start();
            while self.step(self.end) {}
        }
    }

    pub fn into_report(self) -> MetricsReport {
        self.report(0.0)
    }

    /// Processes every event before `until` and moves the clock there.
    pub fn advance(&mut self, until: SimTime) {
        while self.step(until) {}
        self.now = self.now.max(until);
    }

    pub fn logical_devices(&self) -> Vec<&str> {
        self.ldevs.iter().map(|l| l.name.as_str()).collect()
    }

    /// One flusher exists per logical device.
    pub fn flusher_count(&self) -> usize {
        self.ldevs.len()
    }

    pub fn counters(&self, device: &str) -> Option<DeviceCounters> {
        self.ldevs.iter().find(|l| l.name == device).map(|l| DeviceCounters {
            requests: l.requests,
            commands: l.commands,
            bytes_written: l.bytes_written,
            bytes_read: l.bytes_read,
        })
    }
}
