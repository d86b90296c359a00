// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::*;
use crate::profiles::builtin_profile;
use crate::storage::{closed_loop_throughput, AccessPattern, DeviceProfile, IoKind};
use crate::units::{ByteSize, GIB, KIB, MIB};
use crate::workload::{FioJob, FioMode, OltpMix, TableSpec};
use crate::writeback::{FlusherParams, ThrottleParams};

fn device(name: &str, profile: DeviceProfile) -> DeviceSpec {
    DeviceSpec {
        name: name.to_string(),
        profile,
    }
}

fn fio(pattern: AccessPattern, mode: FioMode, threads: u32) -> FioJob {
    FioJob {
        pattern,
        kind: IoKind::Write,
        io_size: ByteSize(8 * KIB),
        threads,
        mode,
        target_file_size: ByteSize(100 * GIB),
    }
}

fn scenario(devices: Vec<DeviceSpec>, workload: Workload, duration_s: f64) -> Scenario {
    let first = devices[0].name.clone();
    Scenario {
        name: "test".into(),
        seed: 7,
        duration_s,
        vcpus: 8,
        memory: 4 * GIB,
        devices,
        raid_groups: Vec::new(),
        placement: Placement::single(&first),
        workload,
        throttle: ThrottleParams::default(),
        writeback: FlusherParams::default(),
    }
}

fn tables(n: usize) -> Vec<TableSpec> {
    (0..n)
        .map(|i| TableSpec::new(&format!("t{i}"), 100.0, 0.0, 10 * GIB))
        .collect()
}

fn oltp(tables: Vec<TableSpec>, commit_rate: f64) -> OltpMix {
    OltpMix {
        name: "test".into(),
        tables,
        commit_rate,
        clients: 8,
        wal_bytes_per_txn: ByteSize(8 * KIB),
        wal_page_size: ByteSize(8 * KIB),
        wal_segment_size: ByteSize(GIB),
        checkpoint_interval_s: 30.0,
    }
}

#[test]
fn direct_single_thread_matches_closed_loop_oracle() {
    let p = builtin_profile("local-ssd").unwrap();
    let sc = scenario(
        vec![device("ssd", p.clone())],
        Workload::Fio(fio(AccessPattern::Random, FioMode::Direct, 1)),
        5.0,
    );
    let report = run(&sc).unwrap();
    let oracle = closed_loop_throughput(&p, 1, 8 * KIB, AccessPattern::Random, 5.0, 7);
    let rel = (report.throughput_mb_s / oracle - 1.0).abs();
    assert!(rel < 0.02, "engine {} vs oracle {oracle}", report.throughput_mb_s);
}

#[test]
fn fsync_of_one_page_takes_one_service_time() {
    let mut p = DeviceProfile::simple("dist", 700.0, GIB);
    p.iops_limit = 16_000;
    p.bandwidth_limit = 1000 * MIB;
    let sc = scenario(vec![device("d", p)], Workload::Oltp(oltp(tables(1), 10.0)), 10.0);
    let mut w = World::idle(&sc).unwrap();
    let wal = w.file_id(WAL_OBJECT).unwrap();
    assert_eq!(w.fsync_blocking(wal), 0, "clean file");
    assert_eq!(w.buffered_write(wal, 0, 8 * KIB), 0);
    assert_eq!(w.fsync_blocking(wal), 708);
    assert_eq!(w.cache().residual_bytes(), 0);
}

#[test]
fn wal_fsync_merges_contiguous_pages() {
    let sc = scenario(
        vec![device("d", DeviceProfile::simple("dist", 700.0, GIB))],
        Workload::Oltp(oltp(tables(1), 10.0)),
        10.0,
    );
    let mut w = World::idle(&sc).unwrap();
    let wal = w.file_id(WAL_OBJECT).unwrap();
    for i in 0..10 {
        w.buffered_write(wal, i * 8 * KIB, 8 * KIB);
    }
    assert_eq!(w.cache().extents(wal), vec![(0, 80 * KIB)]);
    w.fsync_blocking(wal);
    let c = w.counters("d").unwrap();
    assert_eq!((c.requests, c.commands, c.bytes_written), (10, 1, 80 * KIB));
}

#[test]
fn zero_duration_gives_an_empty_report() {
    let sc = scenario(
        vec![device("d", builtin_profile("ebs-gp3-like").unwrap())],
        Workload::Fio(fio(AccessPattern::Random, FioMode::Direct, 4)),
        0.0,
    );
    let r = run(&sc).unwrap();
    assert_eq!(r.app_bytes, 0);
    assert_eq!(r.events, 0);
    assert!(r.timeline.is_empty());
    assert!(r.devices.iter().all(|d| d.commands == 0 && d.bytes_written == 0));
}

#[test]
fn runs_are_seed_deterministic() {
    let sc = scenario(
        vec![device("d", builtin_profile("ebs-gp3-like").unwrap())],
        Workload::Fio(fio(AccessPattern::Random, FioMode::Buffered, 4)),
        10.0,
    );
    let a = serde_json::to_string(&run(&sc).unwrap()).unwrap();
    let b = serde_json::to_string(&run(&sc).unwrap()).unwrap();
    assert_eq!(a, b);
    let mut other = sc.clone();
    other.seed = 8;
    assert_ne!(a, serde_json::to_string(&run(&other).unwrap()).unwrap());
}

#[test]
fn buffered_random_writes_conserve_bytes_and_throttle() {
    let sc = scenario(
        vec![device("d", builtin_profile("ebs-gp3-like").unwrap())],
        Workload::Fio(fio(AccessPattern::Random, FioMode::Buffered, 8)),
        20.0,
    );
    let r = run(&sc).unwrap();
    assert!(r.dirty.conserved(), "{:?}", r.dirty);
    assert!(r.dirty.throttle_onset_s.is_some());
    assert!(r.timeline.iter().any(|p| p.throttle_delay_us > 0));
    let d = &r.devices[0];
    assert!((d.mean_command_kb * d.commands as f64 * 1024.0 - (d.bytes_written + d.bytes_read) as f64).abs() < 1.0);
}

#[test]
fn raid_group_presents_one_device_with_one_flusher() {
    let p = builtin_profile("ebs-gp3-like").unwrap();
    let mut sc = scenario(
        (0..4).map(|i| device(&format!("m{i}"), p.clone())).collect(),
        Workload::Fio(fio(AccessPattern::Sequential, FioMode::Buffered, 4)),
        10.0,
    );
    sc.raid_groups.push(RaidGroup {
        name: "md0".into(),
        members: (0..4).map(|i| format!("m{i}")).collect(),
        chunk_size: 32 * KIB,
    });
    sc.placement = Placement::single("md0");
    let w = World::new(&sc).unwrap();
    assert_eq!(w.logical_devices(), vec!["md0"]);
    assert_eq!(w.flusher_count(), 1);
    let r = run(&sc).unwrap();
    assert!(r.dirty.conserved());
    let md = r.device("md0").unwrap();
    assert_eq!(md.members.len(), 4);
    assert!(md.members.iter().all(|m| m.commands > 0));
    assert_eq!(md.members.iter().map(|m| m.bytes).sum::<u64>(), md.bytes_written);
}

#[test]
fn raid_members_are_not_placement_targets() {
    let p = builtin_profile("ebs-gp3-like").unwrap();
    let mut sc = scenario(
        vec![device("m0", p.clone()), device("m1", p)],
        Workload::Fio(fio(AccessPattern::Random, FioMode::Direct, 1)),
        1.0,
    );
    sc.raid_groups.push(RaidGroup {
        name: "md0".into(),
        members: vec!["m0".into(), "m1".into(), "m9".into()],
        chunk_size: 1000,
    });
    let errs = sc.validate();
    assert_eq!(errs.len(), 2, "{errs:?}");
    sc.raid_groups[0].members.pop();
    sc.raid_groups[0].chunk_size = 8 * KIB;
    let errs = sc.validate();
    assert!(errs[0].contains("raid member"), "{errs:?}");
}

#[test]
fn validation_lists_every_problem() {
    let mut sc = scenario(
        vec![device("d", DeviceProfile::simple("x", 0.0, 1))],
        Workload::Fio(fio(AccessPattern::Random, FioMode::Direct, 0)),
        -1.0,
    );
    sc.vcpus = 0;
    assert!(sc.validate().len() >= 4, "{:?}", sc.validate());
    assert!(World::new(&sc).is_err());
}

#[test]
fn single_flusher_falls_behind_a_fast_writer() {
    // 100 MB/s of random dirtying against one flusher on a distributed
    // device; throttling is pushed out of the way.
    let mut sc = scenario(
        vec![device("d", builtin_profile("ebs-gp3-like").unwrap())],
        Workload::Oltp(oltp(tables(1), 10.0)),
        1.0,
    );
    sc.memory = 64 * GIB;
    sc.throttle = ThrottleParams {
        background_ratio: 0.0001,
        hard_ratio: 1.0,
        max_pause_us: 0,
    };
    let mut w = World::idle(&sc).unwrap();
    let file = w.file_id("t0").unwrap();
    let mut rng = crate::storage::sim_rng(3);
    let mut samples = Vec::new();
    for step in 1..=6000u64 {
        for _ in 0..128 {
            let page = rand::Rng::random_range(&mut rng, 0..(10 * GIB / 8192));
            w.buffered_write(file, page * 8192, 8192);
        }
        w.advance(step * 10_000);
        if step % 100 == 0 {
            samples.push(w.cache().total_dirty_bytes());
        }
    }
    assert!(samples.windows(2).all(|s| s[1] > s[0]));
    let flushed = w.cache().bytes_flushed() as f64 / MIB as f64 / 60.0;
    assert!(flushed > 5.0 && flushed < 100.0, "drain {flushed} MB/s");
}

fn drained_bytes(devices: usize) -> u64 {
    let p = builtin_profile("ebs-gp3-like").unwrap();
    let mut sc = scenario(
        (0..devices).map(|i| device(&format!("d{i}"), p.clone())).collect(),
        Workload::Oltp(oltp(tables(devices), 10.0)),
        1.0,
    );
    sc.memory = GIB;
    let mut objects = BTreeMap::new();
    for i in 0..devices {
        objects.insert(format!("t{i}"), format!("d{i}"));
    }
    sc.placement = Placement::Map {
        default: Some("d0".into()),
        objects,
    };
    let mut w = World::idle(&sc).unwrap();
    let total_pages = 80_000u64;
    for i in 0..devices {
        let f = w.file_id(&format!("t{i}")).unwrap();
        for k in 0..total_pages / devices as u64 {
            w.buffered_write(f, k * 3 * 8192, 8192);
        }
    }
    w.advance(10_000_000);
    w.cache().bytes_flushed()
}

#[test]
fn parallel_flushers_scale_drain() {
    let one = drained_bytes(1) as f64;
    let four = drained_bytes(4) as f64;
    let ratio = four / one;
    assert!((3.4..=4.6).contains(&ratio), "drain ratio {ratio}");
}

#[test]
fn wal_appends_are_sequential_within_a_segment() {
    let mut mix = oltp(tables(2), 500.0);
    mix.wal_segment_size = ByteSize(4 * MIB);
    let sc = scenario(
        vec![device("d", builtin_profile("local-ssd").unwrap())],
        Workload::Oltp(mix),
        5.0,
    );
    let mut w = World::new(&sc).unwrap();
    w.record_wal_offsets();
    w.run_to_end();
    let offs = w.wal_offsets().to_vec();
    let r = w.into_report();
    assert!(r.committed_txns > 1000);
    // Transactions still waiting on their fsync at the end have appended too.
    assert!(offs.len() as u64 >= r.committed_txns);
    let mut wraps = 0;
    for pair in offs.windows(2) {
        if pair[1] == 0 {
            wraps += 1;
        } else {
            assert_eq!(pair[1], pair[0] + 8 * KIB);
        }
    }
    assert!(wraps >= 1);
}

#[test]
fn every_commit_is_one_wal_fsync() {
    let sc = scenario(
        vec![device("d", builtin_profile("local-ssd").unwrap())],
        Workload::Oltp(oltp(tables(2), 100.0)),
        10.0,
    );
    let r = run(&sc).unwrap();
    let lat = r.commit_latency.as_ref().unwrap();
    assert_eq!(lat.count, r.committed_txns);
    // Low offered load: the proxy tracks the offered rate.
    let offered = 100.0 * 60.0;
    assert!((r.txn_rate_proxy / offered - 1.0).abs() < 0.1, "{}", r.txn_rate_proxy);
}
