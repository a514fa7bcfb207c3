//! Worked examples with known broadcasts, loads and decompositions.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::analysis::{load_graph_based, worst_case_load};
use crate::delivery::{encode_graph_based, encode_universal, redundancy_groups, xor_supports, SubMessage};
use crate::decomposition::{decompose, enumerate_decompositions, search_decompositions};
use crate::instance::CanonicalInstance;
use crate::lifecycle::{relabel_subfiles, update_caches};
use crate::load::LoadValue;
use crate::model::{Assignment, FileTransitionGraph, SubfileLabel, SystemParams, WorkerSet};
use crate::placement::{demand_sets, partition_files, place_caches, CacheState};
use crate::protocol::execute_shuffle;

pub type MessageTable = &'static [(&'static [usize], &'static [&'static str])];

pub const EXAMPLE1_NEXT: [usize; 4] = [2, 3, 4, 1];
pub const EXAMPLE1_MESSAGES: MessageTable = &[
    (&[1, 2], &["A_2", "B_3", "B_4", "C_1"]),
    (&[1, 3], &["A_3", "B_3", "C_1", "D_1"]),
    (&[2, 3], &["B_3", "C_1", "C_4", "D_2"]),
];

/// Caches after the update step, before relabeling: `(worker, processing, excess)`.
pub const EXAMPLE1_UPDATED: &[(usize, &[&str], &[&str])] = &[
    (1, &["B_1", "B_3", "B_4"], &["C_1", "D_1", "A_4"]),
    (2, &["C_1", "C_2", "C_4"], &["A_2", "D_2", "B_1"]),
    (3, &["D_1", "D_2", "D_3"], &["A_3", "B_3", "C_2"]),
    (4, &["A_2", "A_3", "A_4"], &["B_4", "C_4", "D_3"]),
];

pub const EXAMPLE2_NEXT: [usize; 6] = [2, 3, 1, 4, 6, 5];
pub const EXAMPLE2_MESSAGES: MessageTable = &[
    (&[1, 2, 3], &["A_24", "A_25", "A_26", "B_34", "B_35", "B_36", "C_14", "C_15", "C_16"]),
    (&[1, 2, 4], &["A_24", "B_34", "B_45", "B_46", "C_14"]),
    (&[1, 2, 5], &["A_25", "B_35", "B_45", "B_56", "C_15", "E_12", "F_12"]),
    (&[1, 3, 4], &["A_24", "A_45", "A_46", "B_34", "C_14"]),
    (&[1, 3, 5], &["A_25", "A_45", "A_56", "B_35", "C_15", "E_13", "F_13"]),
    (&[1, 4, 5], &["A_45", "B_45", "E_14", "F_14"]),
    (&[2, 3, 4], &["A_24", "B_34", "C_14", "C_45", "C_46"]),
    (&[2, 3, 5], &["A_25", "B_35", "C_15", "C_45", "C_56", "E_23", "F_23"]),
    (&[2, 4, 5], &["B_45", "C_45", "E_24", "F_24"]),
    (&[3, 4, 5], &["A_45", "C_45", "E_34", "F_34"]),
];

pub const EXAMPLE3_MESSAGES: MessageTable = &[
    (&[1, 2], &["A_2", "B_3", "B_4", "B_5", "B_6", "C_1"]),
    (&[1, 3], &["A_2", "A_4", "A_5", "A_6", "B_3", "C_1"]),
    (&[1, 4], &["A_4", "B_4"]),
    (&[1, 5], &["A_5", "B_5", "E_1", "F_1"]),
    (&[2, 3], &["A_2", "B_3", "C_1", "C_4", "C_5", "C_6"]),
    (&[2, 4], &["B_4", "C_4"]),
    (&[2, 5], &["B_5", "C_5", "E_2", "F_2"]),
    (&[3, 4], &["A_4", "C_4"]),
    (&[3, 5], &["A_5", "C_5", "E_3", "F_3"]),
    (&[4, 5], &["E_4", "F_4"]),
];

/// Eight files on four workers, worker `i` holding files `2i-1, 2i`. The first matching found
/// by file order splits it into two 2-cycle subgraphs; another split gives 3 and 1 cycles.
pub fn example5() -> (SystemParams, Assignment) {
    // Edges (file: from -> to): 1:1->1, 2:1->4, 3:2->3, 4:2->2, 5:3->4, 6:3->1, 7:4->2, 8:4->3.
    let d = vec![vec![1, 6], vec![4, 7], vec![3, 8], vec![2, 5]];
    (
        SystemParams::new(8, 4, 4).expect("valid"),
        Assignment::with_canonical_u(d).expect("valid"),
    )
}

/// Ten files on five workers where each neighbour pair swaps one file around a 5-cycle.
pub fn counterexample() -> (SystemParams, Assignment) {
    // Worker i holds files 2i-1, 2i; one goes to i+1, the other to i-1 (cyclically).
    let d = vec![vec![4, 9], vec![1, 6], vec![3, 8], vec![5, 10], vec![2, 7]];
    (
        SystemParams::new(10, 5, 2).expect("valid"),
        Assignment::with_canonical_u(d).expect("valid"),
    )
}

pub fn labels(names: &[&str]) -> BTreeSet<SubfileLabel> {
    names
        .iter()
        .map(|s| SubfileLabel::parse_short(s).expect("fixture label"))
        .collect()
}

pub fn table_matches(messages: &[SubMessage], table: MessageTable) -> bool {
    messages.len() == table.len()
        && messages.iter().zip(table).all(|(m, (delta, names))| {
            m.delta == delta.iter().copied().collect::<WorkerSet>() && m.support == labels(names)
        })
}

#[derive(Debug, Clone, Serialize)]
pub struct GoldenCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> GoldenCheck {
    GoldenCheck {
        name: name.to_string(),
        passed,
        detail: detail.into(),
    }
}

fn all_decode(params: &SystemParams, a: &Assignment) -> bool {
    let caches = place_caches(params, a);
    let g = FileTransitionGraph::from_assignment(a);
    decompose(&g)
        .and_then(|d| execute_shuffle(params, a, &caches, &d, None))
        .map(|o| o.verified())
        .unwrap_or(false)
}

fn updated_matches(updated: &[CacheState]) -> bool {
    EXAMPLE1_UPDATED.iter().all(|(w, p, e)| {
        updated[w - 1].processing == labels(p) && updated[w - 1].excess == labels(e)
    })
}

pub fn example1_checks() -> Vec<GoldenCheck> {
    let params = SystemParams::canonical(4, 2).expect("valid");
    let a = Assignment::from_permutation(&EXAMPLE1_NEXT).expect("valid");
    let inst = CanonicalInstance::from_assignment(&params, &a).expect("canonical");
    let msgs = encode_graph_based(&inst);
    let load = crate::analysis::measured_load(&msgs, &params);
    let caches = place_caches(&params, &a);
    let demands = demand_sets(&partition_files(&params, &a), &a, &caches);
    let lifecycle = update_caches(&params, &a, &caches, &demands).map(|u| {
        let fig_c = updated_matches(&u);
        let (r, _) = relabel_subfiles(&u, &a);
        fig_c && r == place_caches(&params, &a)
    });
    vec![
        check("example-1 broadcast", table_matches(&msgs, EXAMPLE1_MESSAGES), format!("{} sub-messages", msgs.len())),
        check("example-1 load", load == LoadValue::integer(1), format!("load {load}")),
        check("example-1 decoding", all_decode(&params, &a), "all four workers"),
        check("example-1 cache update", lifecycle.unwrap_or(false), "updated and relabeled caches"),
    ]
}

pub fn example2_checks() -> Vec<GoldenCheck> {
    let params = SystemParams::canonical(6, 3).expect("valid");
    let a = Assignment::from_permutation(&EXAMPLE2_NEXT).expect("valid");
    let inst = CanonicalInstance::from_assignment(&params, &a).expect("canonical");
    let msgs = encode_graph_based(&inst);
    let load = crate::analysis::measured_load(&msgs, &params);
    let no_d = msgs.iter().all(|m| m.support.iter().all(|l| l.file != 4));
    vec![
        check("example-2 broadcast", table_matches(&msgs, EXAMPLE2_MESSAGES), format!("{} sub-messages", msgs.len())),
        check("example-2 load", load == LoadValue::integer(1), format!("load {load}")),
        check("example-2 file D absent", no_d, "no subfile of file 4 in any sub-message"),
        check("example-2 decoding", all_decode(&params, &a), "all six workers"),
    ]
}

pub fn example3_checks() -> Vec<GoldenCheck> {
    let params = SystemParams::canonical(6, 2).expect("valid");
    let a = Assignment::from_permutation(&EXAMPLE2_NEXT).expect("valid");
    let inst = CanonicalInstance::from_assignment(&params, &a).expect("canonical");
    let universal = encode_universal(&inst);
    let groups = redundancy_groups(&inst);
    let want: Vec<WorkerSet> = [[1, 4], [2, 4], [3, 4]]
        .iter()
        .map(|d| d.iter().copied().collect())
        .collect();
    let group_ok = groups.len() == 1 && groups[0].members == want && {
        let supports: Vec<&BTreeSet<SubfileLabel>> = universal
            .iter()
            .filter(|m| want.contains(&m.delta))
            .map(|m| &m.support)
            .collect();
        xor_supports(supports).is_empty()
    };
    let sent = encode_graph_based(&inst);
    let load = crate::analysis::measured_load(&sent, &params);
    vec![
        check("example-3 universal broadcast", table_matches(&universal, EXAMPLE3_MESSAGES), format!("{} sub-messages", universal.len())),
        check("example-3 redundancy group", group_ok, "X_14 + X_24 + X_34 = 0"),
        check("example-3 load", load == LoadValue::new(9, 5) && load == load_graph_based(6, 2, 3), format!("load {load}")),
        check("example-3 decoding", all_decode(&params, &a), "all six workers"),
    ]
}

pub fn example5_checks() -> Vec<GoldenCheck> {
    let (params, a) = example5();
    let g = FileTransitionGraph::from_assignment(&a);
    let first = decompose(&g);
    let first_ok = first
        .as_ref()
        .map(|d| d.sorted_gammas() == vec![2, 2] && d.load(2) == LoadValue::integer(2))
        .unwrap_or(false);
    let best = search_decompositions(&g, params.shat(), 64, 0);
    let best_ok = best
        .as_ref()
        .map(|s| s.best.sorted_gammas() == vec![1, 3] && s.load == LoadValue::new(5, 3))
        .unwrap_or(false);
    let e2e = best
        .ok()
        .and_then(|s| execute_shuffle(&params, &a, &place_caches(&params, &a), &s.best, None).ok())
        .map(|o| o.verified() && o.load == LoadValue::new(5, 3))
        .unwrap_or(false);
    vec![
        check("example-5 first decomposition", first_ok, "gammas (2,2), load 2"),
        check("example-5 best decomposition", best_ok, "gammas (3,1), load 5/3"),
        check("example-5 end to end", e2e, "measured load 5/3, all workers decode"),
    ]
}

pub fn counterexample_checks() -> Vec<GoldenCheck> {
    let (params, a) = counterexample();
    let g = FileTransitionGraph::from_assignment(&a);
    let all = enumerate_decompositions(&g, 16).unwrap_or_default();
    let unique = all.len() == 1 && all[0].gammas == vec![1, 1];
    let load = all.first().map(|d| d.load(params.shat()));
    let e2e = all
        .first()
        .and_then(|d| execute_shuffle(&params, &a, &place_caches(&params, &a), d, None).ok())
        .map(|o| o.verified() && o.load == LoadValue::integer(8))
        .unwrap_or(false);
    vec![
        check("counterexample unique decomposition", unique, format!("{} decompositions", all.len())),
        check(
            "counterexample load",
            load == Some(LoadValue::integer(8)) && load == Some(worst_case_load(10, 5, 1)),
            "load 8, above the 5 of a hand-built scheme",
        ),
        check("counterexample end to end", e2e, "measured load 8, all workers decode"),
    ]
}

pub fn run_goldens() -> Vec<GoldenCheck> {
    let mut v = example1_checks();
    v.extend(example2_checks());
    v.extend(example3_checks());
    v.extend(example5_checks());
    v.extend(counterexample_checks());
    v
}
