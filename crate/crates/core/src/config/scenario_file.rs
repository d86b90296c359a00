// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::placement::ScoreParams;
use crate::profiles::builtin_profile;
use crate::sim::{DeviceSpec, Placement, RaidGroup, Scenario, Workload};
use crate::storage::DeviceProfile;
use crate::units::ByteSize;
use crate::workload::{FioJob, OltpMix};
use crate::writeback::{FlusherParams, ThrottleParams};

use super::line_of;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    #[serde(default = "default_seed")]
    seed: u64,
    duration_s: f64,
    vcpus: u32,
    memory: ByteSize,
    #[serde(default)]
    profiles: BTreeMap<String, ProfileEntry>,
    devices: Vec<DeviceEntry>,
    #[serde(default)]
    raid_groups: Vec<RaidEntry>,
    #[serde(default)]
    placement: PlacementEntry,
    workload: WorkloadEntry,
    #[serde(default)]
    throttle: ThrottleParams,
    #[serde(default)]
    writeback: FlusherParams,
}

fn default_seed() -> u64 {
    1
}

/// A library profile: every field optional when `base` names a profile to
/// start from.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileEntry {
    base: Option<Spanned<String>>,
    base_latency_us: Option<f64>,
    latency_jitter: Option<f64>,
    shared_latency_us: Option<f64>,
    /// Bytes per second.
    internal_bandwidth: Option<ByteSize>,
    iops_limit: Option<u64>,
    bandwidth_limit: Option<ByteSize>,
    hw_queue_count: Option<u32>,
    queue_depth: Option<u32>,
    burst_iops: Option<u64>,
    burst_credit_capacity: Option<u64>,
    burst_refill_fraction: Option<f64>,
    capacity: Option<ByteSize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceEntry {
    name: String,
    profile: Spanned<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RaidEntry {
    name: String,
    members: Vec<Spanned<String>>,
    chunk_size: ByteSize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementEntry {
    default: Option<Spanned<String>>,
    #[serde(default)]
    objects: BTreeMap<String, Spanned<String>>,
    plan_devices: Option<Spanned<Vec<Spanned<String>>>>,
    planner: Option<ScoreParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum WorkloadEntry {
    Fio(FioJob),
    Oltp(OltpMix),
}

struct Ctx<'a> {
    path: &'a str,
    text: &'a str,
    errs: Vec<String>,
}

impl Ctx<'_> {
    fn at<T>(&mut self, s: &Spanned<T>, msg: String) {
        let line = line_of(self.text, s.span().start);
        self.errs.push(format!("{}:{line}: {msg}", self.path));
    }
}

fn overlay(mut p: DeviceProfile, e: &ProfileEntry) -> DeviceProfile {
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = e.$f { p.$f = v; } )* };
    }
    set!(
        base_latency_us,
        latency_jitter,
        shared_latency_us,
        iops_limit,
        hw_queue_count,
        queue_depth,
        burst_iops,
        burst_credit_capacity,
        burst_refill_fraction
    );
    if let Some(v) = e.internal_bandwidth {
        p.internal_bandwidth = v.0;
    }
    if let Some(v) = e.bandwidth_limit {
        p.bandwidth_limit = v.0;
    }
    if let Some(v) = e.capacity {
        p.capacity = v.0;
    }
    p
}

/// A profile with no base must spell out the fields that have no sensible
/// default.
fn from_scratch(name: &str, e: &ProfileEntry) -> std::result::Result<DeviceProfile, String> {
    let mut missing = Vec::new();
    if e.base_latency_us.is_none() {
        missing.push("base_latency_us");
    }
    if e.internal_bandwidth.is_none() {
        missing.push("internal_bandwidth");
    }
    if !missing.is_empty() {
        return Err(format!(
            "profile {name} has no base and is missing {}",
            missing.join(", ")
        ));
    }
    Ok(overlay(DeviceProfile::simple(name, 1.0, 1), e))
}

/// Looks a profile up in the file's library, then among the built-ins.
pub fn resolve_profile(name: &str, library: &BTreeMap<String, DeviceProfile>) -> Option<DeviceProfile> {
    library.get(name).cloned().or_else(|| builtin_profile(name))
}

fn build_library(ctx: &mut Ctx, entries: &BTreeMap<String, ProfileEntry>) -> BTreeMap<String, DeviceProfile> {
    let mut done: BTreeMap<String, DeviceProfile> = BTreeMap::new();
    // Resolve in dependency order; entries whose base is not ready wait a round.
    let mut pending: Vec<&String> = entries.keys().collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|name| {
            let e = &entries[*name];
            let base = match &e.base {
                None => None,
                Some(b) => match done.get(b.get_ref()).cloned().or_else(|| builtin_profile(b.get_ref())) {
                    Some(p) => Some(p),
                    None if entries.contains_key(b.get_ref()) && b.get_ref() != *name => return true,
                    None => {
                        let line = line_of(ctx.text, b.span().start);
                        ctx.errs.push(format!(
                            "{}:{line}: profile {name}: unknown base profile {:?}",
                            ctx.path,
                            b.get_ref()
                        ));
                        return false;
                    }
                },
            };
            let resolved = match base {
                Some(p) => Ok(overlay(p, e)),
                None => from_scratch(name, e),
            };
            match resolved {
                Ok(mut p) => {
                    p.name = (*name).clone();
                    done.insert((*name).clone(), p);
                }
                Err(msg) => ctx.errs.push(format!("{}: {msg}", ctx.path)),
            }
            false
        });
        if pending.len() == before {
            for name in pending {
                ctx.errs.push(format!("{}: profile {name}: base profiles form a cycle", ctx.path));
            }
            break;
        }
    }
    done
}

/// Parses and validates a scenario document. `path` is used in messages.
pub fn parse_scenario(text: &str, path: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    let mut ctx = Ctx {
        path,
        text,
        errs: Vec::new(),
    };
    let library = build_library(&mut ctx, &file.profiles);

    let mut devices = Vec::new();
    for d in &file.devices {
        match resolve_profile(d.profile.get_ref(), &library) {
            Some(profile) => devices.push(DeviceSpec {
                name: d.name.clone(),
                profile,
            }),
            None => ctx.at(
                &d.profile,
                format!("device {}: unknown profile {:?}", d.name, d.profile.get_ref()),
            ),
        }
    }
    let device_names: Vec<&str> = file.devices.iter().map(|d| d.name.as_str()).collect();
    let raid_names: Vec<&str> = file.raid_groups.iter().map(|g| g.name.as_str()).collect();
    let mut raid_groups = Vec::new();
    for g in &file.raid_groups {
        for m in &g.members {
            if !device_names.contains(&m.get_ref().as_str()) {
                ctx.at(m, format!("raid group {}: unknown member device {:?}", g.name, m.get_ref()));
            }
        }
        raid_groups.push(RaidGroup {
            name: g.name.clone(),
            members: g.members.iter().map(|m| m.get_ref().clone()).collect(),
            chunk_size: g.chunk_size.0,
        });
    }

    let check_target = |ctx: &mut Ctx, t: &Spanned<String>, what: &str| {
        let name = t.get_ref().as_str();
        if !device_names.contains(&name) && !raid_names.contains(&name) {
            ctx.at(t, format!("{what}: unknown device {name:?}"));
        }
    };
    let pl = &file.placement;
    let placement = match &pl.plan_devices {
        Some(list) => {
            if pl.default.is_some() || !pl.objects.is_empty() {
                ctx.at(list, "placement: plan_devices excludes default and objects".to_string());
            }
            for t in list.get_ref() {
                check_target(&mut ctx, t, "placement plan_devices");
            }
            Placement::Plan {
                devices: list.get_ref().iter().map(|t| t.get_ref().clone()).collect(),
                params: pl.planner.clone().unwrap_or_default(),
            }
        }
        None => {
            if let Some(d) = &pl.default {
                check_target(&mut ctx, d, "placement default");
            }
            for (obj, t) in &pl.objects {
                check_target(&mut ctx, t, &format!("placement of {obj}"));
            }
            let default = pl
                .default
                .as_ref()
                .map(|d| d.get_ref().clone())
                .or_else(|| (device_names.len() == 1 && raid_names.is_empty()).then(|| device_names[0].to_string()));
            Placement::Map {
                default,
                objects: pl
                    .objects
                    .iter()
                    .map(|(k, v)| (k.clone(), v.get_ref().clone()))
                    .collect(),
            }
        }
    };
    if !ctx.errs.is_empty() {
        return Err(Error::Validation(ctx.errs));
    }

    let name = file.name.clone().unwrap_or_else(|| {
        Path::new(path)
            .file_stem()
            .map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned())
    });
    let scenario = Scenario {
        name,
        seed: file.seed,
        duration_s: file.duration_s,
        vcpus: file.vcpus,
        memory: file.memory.0,
        devices,
        raid_groups,
        placement,
        workload: match file.workload {
            WorkloadEntry::Fio(j) => Workload::Fio(j),
            WorkloadEntry::Oltp(m) => Workload::Oltp(m),
        },
        throttle: file.throttle,
        writeback: file.writeback,
    };
    let errs = scenario.validate();
    if !errs.is_empty() {
        return Err(Error::Validation(errs.into_iter().map(|e| format!("{path}: {e}")).collect()));
    }
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, &path.display().to_string())
}
