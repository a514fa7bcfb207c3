//! Master-side encoding of the broadcast for a canonical instance.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShuffleError};
use crate::instance::CanonicalInstance;
use crate::model::{SubfileLabel, WorkerSet};
use crate::placement::{xor_into, PayloadStore, SubfileUniverse};

/// One coded transmission: the XOR of the subfiles in `support`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubMessage {
    /// Sub-problem index; 0 for a single canonical instance.
    pub subgraph: usize,
    pub delta: WorkerSet,
    pub support: BTreeSet<SubfileLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Vec<u8>>,
}

impl SubMessage {
    /// Fills `payload` from the master's store.
    pub fn attach_payload(&mut self, store: &PayloadStore) -> Result<()> {
        let mut acc = vec![0u8; store.len];
        for l in &self.support {
            let b = store.get(l).ok_or(ShuffleError::MissingPayload(*l))?;
            xor_into(&mut acc, b);
        }
        self.payload = Some(acc);
        Ok(())
    }
}

fn toggle(set: &mut BTreeSet<SubfileLabel>, l: SubfileLabel) {
    if !set.remove(&l) {
        set.insert(l);
    }
}

fn check_delta(inst: &CanonicalInstance, delta: WorkerSet) -> Result<()> {
    let k = inst.k();
    let ok = delta.len() == inst.shat() && delta.is_subset(WorkerSet::range(k - 1));
    if ok {
        Ok(())
    } else {
        Err(ShuffleError::InvalidDelta {
            delta,
            expected: inst.shat(),
            max: k - 1,
        })
    }
}

/// `X_Δ = ⊕_{i∈Δ} ( F^i_{Δ∖i} ⊕ F^{d(i)}_{Δ∖d(i)} ⊕ ⊕_{j∉Δ} F^{d(i)}_{(Δ∪j)∖{i,d(i)}} )`,
/// with dummy terms dropped and repeated terms cancelled.
pub fn encode_submessage(inst: &CanonicalInstance, delta: WorkerSet) -> Result<SubMessage> {
    check_delta(inst, delta)?;
    let mut support = BTreeSet::new();
    let mut add = |file: usize, gamma: WorkerSet| {
        if inst.is_real(file, gamma) {
            toggle(&mut support, SubfileLabel::new(file, gamma));
        }
    };
    let outside = inst.all_workers().difference(delta);
    for i in delta.iter() {
        let di = inst.next(i);
        add(i, delta.without(i));
        if delta.contains(di) {
            add(di, delta.without(di));
        }
        for j in outside.iter() {
            add(di, delta.with(j).without(i).without(di));
        }
    }
    Ok(SubMessage {
        subgraph: 0,
        delta,
        support,
        payload: None,
    })
}

/// Every `Δ ⊆ [K-1]` of size `Ŝ`, sorted by `Δ`.
pub fn encode_universal(inst: &CanonicalInstance) -> Vec<SubMessage> {
    WorkerSet::range(inst.k() - 1)
        .subsets(inst.shat())
        .into_iter()
        .map(|d| encode_submessage(inst, d).expect("deltas drawn from [K-1]"))
        .collect()
}

/// Sub-messages whose XOR vanishes: one worker from each of `Ŝ` cycles not containing worker `K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyGroup {
    /// 1-based positions among the non-ignored cycles.
    pub psi: Vec<usize>,
    pub members: Vec<WorkerSet>,
    pub dropped: WorkerSet,
}

pub fn redundancy_groups(inst: &CanonicalInstance) -> Vec<RedundancyGroup> {
    let k = inst.k();
    let others: Vec<&Vec<usize>> = inst.cycles().iter().filter(|c| !c.contains(&k)).collect();
    (0..others.len())
        .combinations(inst.shat())
        .map(|psi| {
            let mut members: Vec<WorkerSet> = psi
                .iter()
                .map(|&c| others[c].iter().copied())
                .multi_cartesian_product()
                .map(WorkerSet::from_iter)
                .collect();
            members.sort();
            let dropped = *members.last().expect("cycles are non-empty");
            RedundancyGroup {
                psi: psi.iter().map(|c| c + 1).collect(),
                members,
                dropped,
            }
        })
        .collect()
}

/// The universal broadcast minus the dropped member of each redundancy group.
pub fn encode_graph_based(inst: &CanonicalInstance) -> Vec<SubMessage> {
    let dropped: BTreeSet<WorkerSet> = redundancy_groups(inst).iter().map(|g| g.dropped).collect();
    encode_universal(inst)
        .into_iter()
        .filter(|m| !dropped.contains(&m.delta))
        .collect()
}

/// XOR of supports.
pub fn xor_supports<'a>(sets: impl IntoIterator<Item = &'a BTreeSet<SubfileLabel>>) -> BTreeSet<SubfileLabel> {
    let mut acc = BTreeSet::new();
    for s in sets {
        for l in s {
            toggle(&mut acc, *l);
        }
    }
    acc
}

/// Wire form: supports as dense indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastEntry {
    pub subgraph: usize,
    pub delta: WorkerSet,
    pub support: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Vec<u8>>,
}

pub fn broadcast_entries(messages: &[SubMessage], universe: &SubfileUniverse) -> Vec<BroadcastEntry> {
    messages
        .iter()
        .map(|m| BroadcastEntry {
            subgraph: m.subgraph,
            delta: m.delta,
            support: m
                .support
                .iter()
                .map(|l| universe.index_of(l).expect("broadcast labels belong to the universe"))
                .collect(),
            payload: m.payload.clone(),
        })
        .collect()
}
