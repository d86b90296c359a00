// SPDX-License-Identifier: Apache-2.0

//! `wbsim`: run writeback simulations, sweeps, and placement plans from the
//! command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use wbsim_core::config::{
    load_scenario, parse_stats, plan_toml, read_report, write_comparison_csv, write_report,
    write_rows_csv,
};
use wbsim_core::placement::{system_failure_probability, AvailabilityParams, GroupRole};
use wbsim_core::sim::Workload;
use wbsim_core::{compare, plan, run, ByteSize, Error, MetricsReport, Scenario, ScoreParams};

#[derive(Parser)]
#[command(name = "wbsim", version, about = "Storage writeback and placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate scenario files without running them.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run scenarios and write `<name>.json` and `<name>.csv` per scenario.
    Simulate {
        /// Scenario files or directories of `.toml` files.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rerun fio scenarios across thread counts or I/O sizes.
    Sweep {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values, e.g. `1,2,4,8` or `8K,32K`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Group tables onto devices from per-table statistics.
    Plan {
        stats: PathBuf,
        #[arg(long)]
        vcpus: u32,
        /// Planner overrides: `alpha=..,beta=..,gamma=..,cv_threshold=..`.
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
        #[arg(long, default_value = "plan.toml")]
        out: PathBuf,
    },
    /// Failure probability of a k-volume system against a single volume.
    Availability {
        /// Per-block failure probability.
        p: f64,
        /// Replication factor.
        r: u32,
        /// Total blocks.
        b: u64,
        /// Volume count.
        k: u64,
    },
    /// Tabulate reports (`.json`) or scenarios (`.toml`) against the first.
    Compare {
        #[arg(required = true, num_args = 2..)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "comparison.csv")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Threads,
    IoSize,
}

impl Axis {
    fn label(self) -> &'static str {
        match self {
            Axis::Threads => "threads",
            Axis::IoSize => "io_size",
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    scenario: String,
    device: String,
    axis: &'static str,
    value: String,
    throughput_mb_s: f64,
    mean_command_kb: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .downcast_ref::<Error>()
                .is_some_and(Error::is_validation)
                || e.downcast_ref::<Usage>().is_some();
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}

/// A malformed command line rather than a bad scenario.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Validate { paths } => {
            let files = expand(&paths)?;
            for f in &files {
                load_scenario(f)?;
            }
            println!("{} scenario(s) valid", files.len());
            Ok(())
        }
        Command::Simulate {
            paths,
            seed,
            duration,
            out,
        } => {
            let scenarios = load_all(&paths, seed, duration)?;
            let reports = run_all(&scenarios)?;
            for r in &reports {
                write_report(r, &out)?;
                println!("{}", summary(r));
            }
            Ok(())
        }
        Command::Sweep {
            paths,
            axis,
            values,
            seed,
            duration,
            out,
        } => sweep(&paths, axis, &values, seed, duration, &out),
        Command::Plan {
            stats,
            vcpus,
            params,
            out,
        } => cmd_plan(&stats, vcpus, &params, &out),
        Command::Availability { p, r, b, k } => {
            let params = AvailabilityParams { p, r, b, k };
            let errs = params.validate();
            if !errs.is_empty() {
                return Err(Error::Validation(errs).into());
            }
            let pk = system_failure_probability(&params);
            let p1 = system_failure_probability(&AvailabilityParams { k: 1, ..params });
            let delta = (pk - p1).abs();
            let rel = if p1 == 0.0 { delta } else { delta / p1 };
            println!("P(k={k}) = {pk:.17e}  P(k=1) = {p1:.17e}  |delta| = {delta:.3e} (relative {rel:.3e})");
            Ok(())
        }
        Command::Compare {
            paths,
            seed,
            duration,
            out,
        } => {
            let mut reports = Vec::new();
            let mut pending = Vec::new();
            for p in &paths {
                if p.extension().is_some_and(|e| e == "json") {
                    reports.push(Some(read_report(p)?));
                } else {
                    for f in expand(std::slice::from_ref(p))? {
                        pending.push((reports.len(), scenario_with(&f, seed, duration)?));
                        reports.push(None);
                    }
                }
            }
            let scenarios: Vec<Scenario> = pending.iter().map(|(_, s)| s.clone()).collect();
            for ((i, _), r) in pending.iter().zip(run_all(&scenarios)?) {
                reports[*i] = Some(r);
            }
            let reports: Vec<MetricsReport> = reports.into_iter().flatten().collect();
            if reports.len() < 2 {
                return Err(usage("compare needs at least two reports or scenarios"));
            }
            let rows = compare(&reports);
            write_comparison_csv(&rows, &out)?;
            for r in &rows {
                println!(
                    "{:<24} {}={:.1} x{:.2}  {} merge {:.1}% qdepth {:.2}",
                    r.scenario, r.metric, r.value, r.ratio, r.focus_device, r.merge_rate_pct, r.mean_queue_depth
                );
            }
            Ok(())
        }
    }
}

/// Files named directly, plus the sorted `.toml` files of any directory.
fn expand(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|e| e == "toml"))
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(usage(format!("{}: no .toml scenarios", p.display())));
            }
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn scenario_with(path: &Path, seed: Option<u64>, duration: Option<f64>) -> anyhow::Result<Scenario> {
    let mut s = load_scenario(path)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(d) = duration {
        s.duration_s = d;
        let errs = s.validate();
        if !errs.is_empty() {
            return Err(Error::Validation(errs).into());
        }
    }
    Ok(s)
}

fn load_all(paths: &[PathBuf], seed: Option<u64>, duration: Option<f64>) -> anyhow::Result<Vec<Scenario>> {
    expand(paths)?
        .iter()
        .map(|f| scenario_with(f, seed, duration))
        .collect()
}

/// Runs independent worlds in parallel; results keep input order.
fn run_all(scenarios: &[Scenario]) -> anyhow::Result<Vec<MetricsReport>> {
    let reports: Result<Vec<_>, _> = scenarios.par_iter().map(run).collect();
    Ok(reports?)
}

fn summary(r: &MetricsReport) -> String {
    let (metric, value) = r.headline();
    let focus = r.focus();
    format!(
        "{}: {metric}={value:.1} over {:.0}s, {} merge {:.1}%, qdepth {:.2}, dirtied {} flushed {}",
        r.scenario,
        r.duration_s,
        r.focus_device,
        focus.map_or(0.0, |d| d.merge_rate_pct),
        focus.map_or(0.0, |d| d.mean_queue_depth),
        ByteSize(r.dirty.bytes_dirtied),
        ByteSize(r.dirty.bytes_flushed),
    )
}

fn sweep(
    paths: &[PathBuf],
    axis: Axis,
    values: &[String],
    seed: Option<u64>,
    duration: Option<f64>,
    out: &Path,
) -> anyhow::Result<()> {
    let values: Vec<&str> = values.iter().map(|v| v.trim()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(usage("--values is empty"));
    }
    let bases = load_all(paths, seed, duration)?;
    let mut runs = Vec::new();
    for base in &bases {
        let Workload::Fio(job) = &base.workload else {
            return Err(usage(format!("{}: sweeps apply to fio workloads only", base.name)));
        };
        for v in &values {
            let mut job = job.clone();
            match axis {
                Axis::Threads => {
                    job.threads = v
                        .parse()
                        .map_err(|_| usage(format!("bad thread count `{v}`")))?;
                }
                Axis::IoSize => {
                    job.io_size = ByteSize::parse(v).map_err(|e| usage(format!("bad io size `{v}`: {e}")))?;
                }
            }
            let mut s = base.clone();
            s.workload = Workload::Fio(job);
            let errs = s.validate();
            if !errs.is_empty() {
                return Err(Error::Validation(errs).into());
            }
            runs.push((v.to_string(), s));
        }
    }
    let scenarios: Vec<Scenario> = runs.iter().map(|(_, s)| s.clone()).collect();
    let reports = run_all(&scenarios)?;
    let rows: Vec<SweepRow> = runs
        .iter()
        .zip(&reports)
        .map(|((value, s), r)| {
            let focus = r.focus();
            SweepRow {
                scenario: s.name.clone(),
                device: r.focus_device.clone(),
                axis: axis.label(),
                value: value.clone(),
                throughput_mb_s: r.throughput_mb_s,
                mean_command_kb: focus.map_or(0.0, |d| d.mean_command_kb),
            }
        })
        .collect();
    write_rows_csv(&rows, out)?;
    println!("{} rows written to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_plan(stats: &Path, vcpus: u32, overrides: &[String], out: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(stats).with_context(|| format!("reading {}", stats.display()))?;
    let tables = parse_stats(&text, &stats.display().to_string())?;
    let mut params = ScoreParams::default();
    for kv in overrides {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(usage(format!("--params expects key=value, got `{kv}`")));
        };
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("--params {k}: `{v}` is not a number")))?;
        match k.trim() {
            "alpha" => params.alpha = v,
            "beta" => params.beta = v,
            "gamma" => params.gamma = v,
            "cv_threshold" => params.cv_threshold = v,
            other => return Err(usage(format!("unknown planner parameter `{other}`"))),
        }
    }
    let errs = params.validate();
    if !errs.is_empty() {
        return Err(Error::Validation(errs).into());
    }
    let p = plan(&tables, vcpus, &params)?;
    std::fs::write(out, plan_toml(&p)?).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "{} groups for {vcpus} vCPUs (budget {}..{}), CV {:.3}",
        p.groups.len(),
        p.budget.initial,
        p.budget.maximum,
        p.cv
    );
    for g in &p.groups {
        let tier = g.tier.as_deref().map(|t| format!(" [{t}]")).unwrap_or_default();
        let role = match g.role {
            GroupRole::Wal => "wal",
            GroupRole::Data => "data",
        };
        println!("  group {} {role} score {:.3}: {}{tier}", g.id, g.score_sum, g.members.join(", "));
    }
    Ok(())
}
