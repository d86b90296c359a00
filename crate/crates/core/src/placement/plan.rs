// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::TableSpec;

use super::{coefficient_of_variation, normalize, score, ScoreParams};

/// Member name of the write-ahead log in a plan.
pub const WAL_MEMBER: &str = "wal";

/// Tier annotation attached to the WAL group.
const WAL_TIER: &str = "low-latency tier preferred";

/// Starting number of flusher threads (one per device group).
pub fn initial_kft_count(vcpus: u32) -> u32 {
    if vcpus <= 4 {
        2
    } else {
        4
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KftBudget {
    pub vcpus: u32,
    pub initial: u32,
    pub maximum: u32,
}

impl KftBudget {
    /// Hosts with 5 to 15 vCPUs would start above their quarter-of-vCPUs
    /// maximum; the starting count is clamped to `max(maximum, 2)`.
    pub fn new(vcpus: u32) -> Self {
        let maximum = vcpus / 4;
        let mut initial = initial_kft_count(vcpus);
        if maximum < initial {
            initial = maximum.max(2);
        }
        KftBudget {
            vcpus,
            initial,
            maximum,
        }
    }

    /// Largest group count the planner may reach.
    pub fn ceiling(&self) -> u32 {
        self.maximum.max(self.initial)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupRole {
    Wal,
    Data,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementGroup {
    pub id: usize,
    pub role: GroupRole,
    pub members: Vec<String>,
    pub score_sum: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementPlan {
    pub budget: KftBudget,
    /// Number of device groups, the WAL group included.
    pub kft_count: u32,
    /// CV of the data groups' score sums.
    pub cv: f64,
    pub scores: BTreeMap<String, f64>,
    pub groups: Vec<PlacementGroup>,
}

impl PlacementPlan {
    /// Group index holding `member`.
    pub fn group_of(&self, member: &str) -> Option<usize> {
        self.groups
            .iter()
            .position(|g| g.members.iter().any(|m| m == member))
    }

    pub fn data_sums(&self) -> Vec<f64> {
        self.groups
            .iter()
            .filter(|g| g.role == GroupRole::Data)
            .map(|g| g.score_sum)
            .collect()
    }
}

/// Scores every object from its min-max normalized write frequency, read
/// frequency and size.
pub fn score_objects(tables: &[TableSpec], params: &ScoreParams) -> Vec<f64> {
    let w = normalize(&tables.iter().map(|t| t.write_freq).collect::<Vec<_>>());
    let r = normalize(&tables.iter().map(|t| t.read_freq).collect::<Vec<_>>());
    let s = normalize(&tables.iter().map(|t| t.size.0 as f64).collect::<Vec<_>>());
    (0..tables.len())
        .map(|i| score(w[i], r[i], s[i], params))
        .collect()
}

/// Longest-processing-time assignment: objects in descending score order go
/// to the group with the lowest running sum, lowest index on ties.
fn assign(order: &[usize], scores: &[f64], groups: usize) -> (Vec<Vec<usize>>, Vec<f64>) {
    let mut members = vec![Vec::new(); groups];
    let mut sums = vec![0.0f64; groups];
    for &i in order {
        let g = (0..groups)
            .min_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(a.cmp(&b)))
            .expect("at least one group");
        members[g].push(i);
        sums[g] += scores[i];
    }
    (members, sums)
}

/// Places the WAL alone in group 0 and spreads tables and indexes over the
/// remaining groups, adding groups while their score sums stay unbalanced.
pub fn plan(tables: &[TableSpec], vcpus: u32, params: &ScoreParams) -> Result<PlacementPlan> {
    if tables.is_empty() {
        return Err(Error::Placement("no tables or indexes to place".into()));
    }
    if vcpus == 0 {
        return Err(Error::Placement("vcpus must be >= 1".into()));
    }
    let mut errs: Vec<String> = tables.iter().flat_map(TableSpec::validate).collect();
    errs.extend(params.validate());
    let mut names: Vec<&str> = tables.iter().map(|t| t.name.as_str()).collect();
    names.sort_unstable();
    for w in names.windows(2) {
        if w[0] == w[1] {
            errs.push(format!("duplicate object name {}", w[0]));
        }
    }
    if names.contains(&WAL_MEMBER) {
        errs.push(format!("object name {WAL_MEMBER:?} is reserved for the log"));
    }
    if !errs.is_empty() {
        return Err(Error::Placement(errs.join("; ")));
    }

    let budget = KftBudget::new(vcpus);
    let scores = score_objects(tables, params);
    let mut order: Vec<usize> = (0..tables.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| tables[a].name.cmp(&tables[b].name))
    });

    // A group without members would only add an idle device.
    let max_data = (budget.ceiling() as usize - 1).min(tables.len());
    let mut data_groups = if budget.initial >= 4 {
        (budget.initial as usize - 1).min(max_data)
    } else {
        1
    };
    let (mut members, mut sums) = assign(&order, &scores, data_groups);
    let mut cv = coefficient_of_variation(&sums);
    while budget.initial >= 4 && cv > params.cv_threshold && data_groups < max_data {
        data_groups += 1;
        (members, sums) = assign(&order, &scores, data_groups);
        cv = coefficient_of_variation(&sums);
    }

    let mut groups = vec![PlacementGroup {
        id: 0,
        role: GroupRole::Wal,
        members: vec![WAL_MEMBER.to_string()],
        score_sum: 0.0,
        tier: Some(WAL_TIER.to_string()),
    }];
    for (g, (m, sum)) in members.into_iter().zip(sums).enumerate() {
        groups.push(PlacementGroup {
            id: g + 1,
            role: GroupRole::Data,
            members: m.into_iter().map(|i| tables[i].name.clone()).collect(),
            score_sum: sum,
            tier: None,
        });
    }
    Ok(PlacementPlan {
        budget,
        kft_count: groups.len() as u32,
        cv,
        scores: tables
            .iter()
            .zip(&scores)
            .map(|(t, &s)| (t.name.clone(), s))
            .collect(),
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::GIB;
    use proptest::prelude::*;

    fn tpcc_like() -> Vec<TableSpec> {
        vec![
            TableSpec::new("warehouse", 40.0, 80.0, GIB / 10),
            TableSpec::new("district", 60.0, 120.0, GIB / 10),
            TableSpec::new("customer", 300.0, 900.0, 20 * GIB),
            TableSpec::new("history", 120.0, 5.0, 5 * GIB),
            TableSpec::new("new_order", 150.0, 150.0, GIB),
            TableSpec::new("orders", 180.0, 300.0, 5 * GIB),
            TableSpec::new("order_line", 1400.0, 1300.0, 60 * GIB),
            TableSpec::new("item", 0.0, 700.0, GIB / 100),
            TableSpec::new("stock", 1600.0, 1500.0, 80 * GIB),
        ]
    }

    #[test]
    fn initial_counts() {
        assert_eq!(initial_kft_count(32), 4);
        assert_eq!(initial_kft_count(4), 2);
        assert_eq!(initial_kft_count(1), 2);
    }

    #[test]
    fn small_hosts_clamp_the_start() {
        assert_eq!(KftBudget::new(8), KftBudget { vcpus: 8, initial: 2, maximum: 2 });
        assert_eq!(KftBudget::new(12).initial, 3);
        assert_eq!(KftBudget::new(2).ceiling(), 2);
        assert_eq!(KftBudget::new(64).maximum, 16);
    }

    #[test]
    fn two_vcpus_give_wal_plus_one_group() {
        let p = plan(&tpcc_like(), 2, &ScoreParams::default()).unwrap();
        assert_eq!(p.kft_count, 2);
        assert_eq!(p.groups[0].members, vec![WAL_MEMBER]);
        assert_eq!(p.groups[1].members.len(), 9);
        assert_eq!(p.groups[0].tier.as_deref(), Some(WAL_TIER));
    }

    #[test]
    fn top_writers_are_separated() {
        let p = plan(&tpcc_like(), 32, &ScoreParams::default()).unwrap();
        assert_eq!(p.kft_count, 4);
        assert!(p.cv <= 0.3, "cv {}", p.cv);
        assert_ne!(p.group_of("stock"), p.group_of("order_line"));
        assert_eq!(p.group_of(WAL_MEMBER), Some(0));
    }

    #[test]
    fn identical_tables_stop_at_the_budget() {
        let tables: Vec<TableSpec> = ["d", "c", "b", "a"]
            .iter()
            .map(|n| TableSpec::new(n, 10.0, 10.0, GIB))
            .collect();
        // Three data groups for four equal scores of 0.5: sums (1, .5, .5).
        let p = plan(&tables, 16, &ScoreParams::default()).unwrap();
        assert_eq!(p.kft_count, 4);
        let expected = (1.0f64 / 18.0).sqrt() / (2.0 / 3.0);
        assert!((p.cv - expected).abs() < 1e-12);
        assert_eq!(p.groups[1].members, vec!["a", "d"]);
        assert_eq!(p.groups[2].members, vec!["b"]);
        assert_eq!(p.groups[3].members, vec!["c"]);

        let p = plan(&tables, 32, &ScoreParams::default()).unwrap();
        assert_eq!(p.kft_count, 5);
        assert_eq!(p.cv, 0.0);
        let firsts: Vec<&str> = p.groups[1..].iter().map(|g| g.members[0].as_str()).collect();
        assert_eq!(firsts, vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn one_table_two_vcpus() {
        let p = plan(&[TableSpec::new("t", 1.0, 1.0, GIB)], 2, &ScoreParams::default()).unwrap();
        assert_eq!(p.kft_count, 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(plan(&[], 8, &ScoreParams::default()).is_err());
        let dup = vec![TableSpec::new("x", 1.0, 1.0, GIB), TableSpec::new("x", 2.0, 1.0, GIB)];
        assert!(plan(&dup, 8, &ScoreParams::default()).is_err());
        assert!(plan(&[TableSpec::new("wal", 1.0, 1.0, GIB)], 8, &ScoreParams::default()).is_err());
    }

    fn arb_tables() -> impl Strategy<Value = Vec<TableSpec>> {
        prop::collection::vec((0.0f64..2000.0, 0.0f64..2000.0, 1u64..100), 1..10).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (w, r, s))| TableSpec::new(&format!("t{i}"), w, r, s * GIB))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn plan_is_order_invariant(tables in arb_tables(), vcpus in 1u32..64, seed in any::<u64>()) {
            let params = ScoreParams::default();
            let a = plan(&tables, vcpus, &params).unwrap();
            let mut shuffled = tables.clone();
            let n = shuffled.len();
            for i in 0..n {
                shuffled.swap(i, (seed as usize).wrapping_add(i * 7) % n);
            }
            prop_assert_eq!(a, plan(&shuffled, vcpus, &params).unwrap());
        }

        #[test]
        fn plan_is_scale_invariant(tables in arb_tables(), vcpus in 1u32..64, k in 0.1f64..50.0) {
            let params = ScoreParams::default();
            let scaled: Vec<TableSpec> = tables
                .iter()
                .map(|t| TableSpec { write_freq: t.write_freq * k, ..t.clone() })
                .collect();
            let a = plan(&tables, vcpus, &params).unwrap();
            let b = plan(&scaled, vcpus, &params).unwrap();
            let names = |p: &PlacementPlan| p.groups.iter().map(|g| g.members.clone()).collect::<Vec<_>>();
            prop_assert_eq!(names(&a), names(&b));
        }

        #[test]
        fn plan_structure(tables in arb_tables(), vcpus in 1u32..64) {
            let p = plan(&tables, vcpus, &ScoreParams::default()).unwrap();
            prop_assert_eq!(&p.groups[0].members, &vec![WAL_MEMBER.to_string()]);
            let mut placed: Vec<String> = p.groups[1..].iter().flat_map(|g| g.members.clone()).collect();
            placed.sort();
            let mut names: Vec<String> = tables.iter().map(|t| t.name.clone()).collect();
            names.sort();
            prop_assert_eq!(placed, names);
            prop_assert_eq!(p.kft_count as usize, p.groups.len());
            prop_assert!(p.kft_count <= p.budget.ceiling());
            let at_limit = p.kft_count == p.budget.ceiling() || p.kft_count as usize == tables.len() + 1;
            prop_assert!(p.cv <= 0.3 || at_limit || p.budget.initial < 4);
        }
    }
}
