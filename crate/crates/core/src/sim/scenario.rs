// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::placement::{plan, PlacementPlan, ScoreParams};
use crate::storage::{DeviceProfile, Origin};
use crate::units::{secs, SimDuration, MIB};
use crate::workload::{FioJob, OltpMix};
use crate::writeback::{FlusherParams, ThrottleParams};

/// Object name of the fio benchmark file.
pub const FIO_OBJECT: &str = "fio";

/// Object name of the write-ahead log.
pub const WAL_OBJECT: &str = crate::placement::WAL_MEMBER;

/// Files are laid out on their device at this alignment.
const FILE_ALIGN: u64 = MIB;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub name: String,
    pub profile: DeviceProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaidGroup {
    pub name: String,
    pub members: Vec<String>,
    pub chunk_size: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Placement {
    /// Explicit object -> device map; `default` catches unlisted objects.
    Map {
        default: Option<String>,
        objects: BTreeMap<String, String>,
    },
    /// Run the planner on the mix's tables and put plan group `i` on
    /// `devices[i]`.
    Plan { devices: Vec<String>, params: ScoreParams },
}

impl Placement {
    pub fn single(device: &str) -> Self {
        Placement::Map {
            default: Some(device.to_string()),
            objects: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Workload {
    Fio(FioJob),
    Oltp(OltpMix),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub duration_s: f64,
    pub vcpus: u32,
    pub memory: u64,
    pub devices: Vec<DeviceSpec>,
    pub raid_groups: Vec<RaidGroup>,
    pub placement: Placement,
    pub workload: Workload,
    pub throttle: ThrottleParams,
    pub writeback: FlusherParams,
}

/// A device the kernel exposes: either a plain device or a RAID-0 array.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalDevice {
    pub name: String,
    /// Indices into `Scenario::devices`; one entry for a plain device.
    pub members: Vec<usize>,
    /// Stripe size for arrays.
    pub chunk_size: Option<u64>,
    pub capacity: u64,
}

/// A file the workload touches, placed at `base` on logical device `device`.
#[derive(Clone, Debug, PartialEq)]
pub struct FileLayout {
    pub name: String,
    pub device: usize,
    pub base: u64,
    pub size: u64,
    pub origin: Origin,
}

/// Devices and file layout derived from a validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub logical: Vec<LogicalDevice>,
    pub files: Vec<FileLayout>,
    pub plan: Option<PlacementPlan>,
}

impl Scenario {
    pub fn duration(&self) -> SimDuration {
        secs(self.duration_s)
    }

    /// (name, size, origin) of every file the workload uses.
    pub fn objects(&self) -> Vec<(String, u64, Origin)> {
        match &self.workload {
            Workload::Fio(job) => vec![(FIO_OBJECT.to_string(), job.target_file_size.0, Origin::Raw)],
            Workload::Oltp(mix) => {
                let mut v = vec![(WAL_OBJECT.to_string(), mix.wal_segment_size.0, Origin::Wal)];
                v.extend(mix.tables.iter().map(|t| (t.name.clone(), t.size.0, t.origin())));
                v
            }
        }
    }

    /// Logical devices: plain devices not claimed by an array, in listing
    /// order, followed by the arrays.
    pub fn logical_devices(&self) -> Vec<LogicalDevice> {
        let claimed: BTreeSet<&str> = self
            .raid_groups
            .iter()
            .flat_map(|g| g.members.iter().map(String::as_str))
            .collect();
        let index: BTreeMap<&str, usize> = self
            .devices
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.as_str(), i))
            .collect();
        let mut out: Vec<LogicalDevice> = self
            .devices
            .iter()
            .enumerate()
            .filter(|(_, d)| !claimed.contains(d.name.as_str()))
            .map(|(i, d)| LogicalDevice {
                name: d.name.clone(),
                members: vec![i],
                chunk_size: None,
                capacity: d.profile.capacity,
            })
            .collect();
        for g in &self.raid_groups {
            let members: Vec<usize> = g.members.iter().filter_map(|m| index.get(m.as_str()).copied()).collect();
            let per = members
                .iter()
                .map(|&i| self.devices[i].profile.capacity)
                .min()
                .unwrap_or(0);
            let per = if g.chunk_size > 0 { per - per % g.chunk_size } else { 0 };
            out.push(LogicalDevice {
                name: g.name.clone(),
                capacity: per * members.len() as u64,
                members,
                chunk_size: Some(g.chunk_size),
            });
        }
        out
    }

    /// Lists every violated scenario invariant.
    pub fn validate(&self) -> Vec<String> {
        self.topology().err().unwrap_or_default()
    }

    /// Validates the scenario and lays its files out on logical devices.
    pub fn topology(&self) -> Result<Topology, Vec<String>> {
        let mut errs = Vec::new();
        if self.vcpus == 0 {
            errs.push("vcpus must be >= 1".to_string());
        }
        if self.memory == 0 {
            errs.push("memory must be > 0".to_string());
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            errs.push("duration_s must be a nonnegative number".to_string());
        }
        if self.devices.is_empty() {
            errs.push("at least one device is required".to_string());
        }
        let mut names = BTreeSet::new();
        for d in &self.devices {
            if !names.insert(d.name.as_str()) {
                errs.push(format!("duplicate device name {}", d.name));
            }
            errs.extend(d.profile.validate().into_iter().map(|e| format!("device {}: {e}", d.name)));
        }
        let mut claimed = BTreeSet::new();
        for g in &self.raid_groups {
            if !names.insert(g.name.as_str()) {
                errs.push(format!("raid group {} reuses a device name", g.name));
            }
            if g.members.is_empty() {
                errs.push(format!("raid group {}: no members", g.name));
            }
            if g.chunk_size == 0 || g.chunk_size % 512 != 0 {
                errs.push(format!("raid group {}: chunk_size must be a positive multiple of 512", g.name));
            }
            for m in &g.members {
                if !self.devices.iter().any(|d| &d.name == m) {
                    errs.push(format!("raid group {}: unknown member device {m}", g.name));
                } else if !claimed.insert(m.as_str()) {
                    errs.push(format!("device {m} belongs to more than one raid group"));
                }
            }
        }
        errs.extend(self.throttle.validate());
        errs.extend(self.writeback.validate());
        match &self.workload {
            Workload::Fio(job) => errs.extend(job.validate()),
            Workload::Oltp(mix) => errs.extend(mix.validate()),
        }
        if !errs.is_empty() {
            return Err(errs);
        }

        let logical = self.logical_devices();
        let by_name: BTreeMap<&str, usize> = logical
            .iter()
            .enumerate()
            .map(|(i, l)| (l.name.as_str(), i))
            .collect();
        let lookup = |target: &str, errs: &mut Vec<String>, what: &str| -> Option<usize> {
            match by_name.get(target) {
                Some(&i) => Some(i),
                None if claimed.contains(target) => {
                    errs.push(format!("{what}: device {target} is a raid member; place data on its group"));
                    None
                }
                None => {
                    errs.push(format!("{what}: unknown device {target}"));
                    None
                }
            }
        };

        let objects = self.objects();
        let mut assigned: BTreeMap<String, usize> = BTreeMap::new();
        let mut the_plan = None;
        match &self.placement {
            Placement::Map { default, objects: map } => {
                let known: BTreeSet<&str> = objects.iter().map(|o| o.0.as_str()).collect();
                for (obj, target) in map {
                    if !known.contains(obj.as_str()) {
                        errs.push(format!("placement: unknown object {obj}"));
                    } else if let Some(i) = lookup(target, &mut errs, &format!("placement of {obj}")) {
                        assigned.insert(obj.clone(), i);
                    }
                }
                let default = match default {
                    Some(t) => lookup(t, &mut errs, "placement default"),
                    None => None,
                };
                for (obj, _, _) in &objects {
                    if !assigned.contains_key(obj) && !map.contains_key(obj) {
                        match default {
                            Some(i) => {
                                assigned.insert(obj.clone(), i);
                            }
                            None => errs.push(format!("placement: object {obj} is not mapped to a device")),
                        }
                    }
                }
            }
            Placement::Plan { devices, params } => {
                let Workload::Oltp(mix) = &self.workload else {
                    return Err(vec!["placement: a planned placement needs an oltp workload".to_string()]);
                };
                match plan(&mix.tables, self.vcpus, params) {
                    Ok(p) => {
                        if p.groups.len() > devices.len() {
                            errs.push(format!(
                                "placement: plan has {} groups but only {} devices are listed",
                                p.groups.len(),
                                devices.len()
                            ));
                        } else {
                            for (g, target) in p.groups.iter().zip(devices) {
                                if let Some(i) = lookup(target, &mut errs, &format!("plan group {}", g.id)) {
                                    for m in &g.members {
                                        assigned.insert(m.clone(), i);
                                    }
                                }
                            }
                        }
                        the_plan = Some(p);
                    }
                    Err(e) => errs.push(e.to_string()),
                }
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }

        let mut used = vec![0u64; logical.len()];
        let mut files = Vec::new();
        for (name, size, origin) in objects {
            let device = assigned[&name];
            let base = used[device];
            used[device] = (base + size).div_ceil(FILE_ALIGN) * FILE_ALIGN;
            if base + size > logical[device].capacity {
                errs.push(format!(
                    "device {}: objects need more than its {} bytes of capacity",
                    logical[device].name, logical[device].capacity
                ));
            }
            files.push(FileLayout {
                name,
                device,
                base,
                size,
                origin,
            });
        }
        errs.dedup();
        if !errs.is_empty() {
            return Err(errs);
        }
        Ok(Topology {
            logical,
            files,
            plan: the_plan,
        })
    }
}
