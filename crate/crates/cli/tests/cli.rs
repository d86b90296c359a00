use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn wbsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn wbsim")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wbsim-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FIO: &str = r#"
name = "small"
seed = 3
duration_s = 0.5
vcpus = 4
memory = "1GiB"

[[devices]]
name = "disk0"
profile = "ebs-gp3-like"

[workload.fio]
pattern = "random"
kind = "write"
io_size = "8K"
threads = 1
mode = "direct"
"#;

const STATS: &str = r#"
[[tables]]
name = "stock"
write_freq = 3900.0
read_freq = 1050.0
size = "34GiB"

[[tables]]
name = "order_line"
write_freq = 2900.0
read_freq = 630.0
size = "30GiB"
write_pattern = "append"

[[tables]]
name = "customer"
write_freq = 1450.0
read_freq = 420.0
size = "18GiB"

[[tables]]
name = "orders"
write_freq = 610.0
read_freq = 130.0
size = "2GiB"
write_pattern = "append"

[[tables]]
name = "history"
write_freq = 360.0
read_freq = 0.0
size = "2GiB"
write_pattern = "append"

[[tables]]
name = "new_order"
write_freq = 490.0
read_freq = 84.0
size = "256MiB"
"#;

#[test]
fn simulate_writes_report_and_timeline_reproducibly() {
    let dir = scratch("simulate");
    fs::write(dir.join("small.toml"), FIO).unwrap();
    let a = wbsim(&["simulate", "small.toml", "--out", "a"], &dir);
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(stdout(&a).contains("small"));
    let b = wbsim(&["simulate", "small.toml", "--out", "b"], &dir);
    assert!(b.status.success());
    for f in ["small.json", "small.csv"] {
        let x = fs::read(dir.join("a").join(f)).unwrap();
        let y = fs::read(dir.join("b").join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs between runs");
    }
    let csv = fs::read_to_string(dir.join("a/small.csv")).unwrap();
    assert!(csv.starts_with("t_s,dirty_bytes,"));
}

#[test]
fn seed_override_changes_nothing_structural() {
    let dir = scratch("seed");
    fs::write(dir.join("small.toml"), FIO).unwrap();
    let o = wbsim(&["simulate", "small.toml", "--seed", "99", "--duration", "0.2", "--out", "o"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let json = fs::read_to_string(dir.join("o/small.json")).unwrap();
    assert!(json.contains("\"seed\": 99"));
}

#[test]
fn unknown_device_reference_is_a_validation_error() {
    let dir = scratch("unknown");
    let bad = FIO.replace("[workload.fio]", "[placement]\ndefault = \"nvme9\"\n\n[workload.fio]");
    fs::write(dir.join("bad.toml"), bad).unwrap();
    let o = wbsim(&["validate", "bad.toml"], &dir);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nvme9"), "{}", stderr(&o));
    let o = wbsim(&["simulate", "bad.toml"], &dir);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let dir = scratch("missing");
    let o = wbsim(&["simulate", "nope.toml"], &dir);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_emits_one_row_per_value() {
    let dir = scratch("sweep");
    fs::write(dir.join("small.toml"), FIO).unwrap();
    let o = wbsim(
        &["sweep", "small.toml", "--axis", "threads", "--values", "1,2,4,8", "--duration", "0.2", "--out", "t.csv"],
        &dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = wbsim(
        &["sweep", "small.toml", "--axis", "io-size", "--values", "8K,32K,128K,512K", "--duration", "0.2", "--out", "s.csv"],
        &dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rows = 0;
    for f in ["t.csv", "s.csv"] {
        let text = fs::read_to_string(dir.join(f)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("scenario,device,axis,value,throughput_mb_s"));
        rows += lines.count();
    }
    assert_eq!(rows, 8);
}

#[test]
fn sweep_rejects_empty_values() {
    let dir = scratch("sweep-empty");
    fs::write(dir.join("small.toml"), FIO).unwrap();
    let o = wbsim(&["sweep", "small.toml", "--axis", "threads", "--values", ""], &dir);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn plan_puts_wal_alone_in_group_zero() {
    let dir = scratch("plan");
    fs::write(dir.join("stats.toml"), STATS).unwrap();
    let o = wbsim(&["plan", "stats.toml", "--vcpus", "32", "--out", "plan.toml"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.join("plan.toml")).unwrap();
    let plan = wbsim_core::config::parse_plan(&text, "plan.toml").unwrap();
    assert_eq!(plan.groups[0].members, vec!["wal".to_string()]);
    assert_eq!(plan.groups.len(), 4);
    assert!(stdout(&o).contains("stock"));
}

#[test]
fn plan_with_one_table_and_two_vcpus_has_two_groups() {
    let dir = scratch("plan-one");
    fs::write(
        dir.join("one.toml"),
        "[[tables]]\nname = \"t\"\nwrite_freq = 1.0\nread_freq = 1.0\nsize = \"1GiB\"\n",
    )
    .unwrap();
    let o = wbsim(&["plan", "one.toml", "--vcpus", "2"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let plan = wbsim_core::config::parse_plan(&fs::read_to_string(dir.join("plan.toml")).unwrap(), "p").unwrap();
    assert_eq!(plan.groups.len(), 2);
}

#[test]
fn plan_rejects_bad_override() {
    let dir = scratch("plan-bad");
    fs::write(dir.join("stats.toml"), STATS).unwrap();
    let o = wbsim(&["plan", "stats.toml", "--vcpus", "32", "--params", "alpha=-1"], &dir);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn availability_reports_equal_probabilities() {
    let dir = scratch("avail");
    let o = wbsim(&["availability", "1e-4", "3", "1000000", "4"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("P(k=4)"));
    let o = wbsim(&["availability", "1e-4", "3", "1000000", "3"], &dir);
    assert_eq!(o.status.code(), Some(1));
    let o = wbsim(&["availability", "1.5", "3", "1000", "1"], &dir);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_reads_reports() {
    let dir = scratch("compare");
    fs::write(dir.join("a.toml"), FIO).unwrap();
    fs::write(dir.join("b.toml"), FIO.replace("name = \"small\"", "name = \"wide\"").replace("threads = 1", "threads = 4")).unwrap();
    let o = wbsim(&["simulate", "a.toml", "b.toml", "--out", "r"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = wbsim(&["compare", "r/small.json", "r/wide.json", "--out", "c.csv"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.join("c.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    let o = wbsim(&["compare", "r/small.json"], &dir);
    assert!(!o.status.success());
}
