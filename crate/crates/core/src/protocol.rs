//! One shuffle on `N ≥ K` files: per-subgraph encoding, decoding at every worker, and verification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analysis::measured_load;
use crate::decoding::{decode_worker, reconstruct_omitted, replay_payloads, DecodeTrace};
use crate::decomposition::Decomposition;
use crate::delivery::{encode_graph_based, redundancy_groups, RedundancyGroup, SubMessage};
use crate::error::{Result, ShuffleError};
use crate::gf2::{gf2_decodability_oracle, OracleReport};
use crate::instance::CanonicalInstance;
use crate::load::LoadValue;
use crate::model::{Assignment, SubfileLabel, SystemParams};
use crate::placement::{demand_sets, partition_files, CacheState, DemandSet, PayloadStore};

/// Master store plus what each worker holds in its cache.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadState {
    pub master: PayloadStore,
    pub workers: Vec<BTreeMap<SubfileLabel, Vec<u8>>>,
}

impl PayloadState {
    pub fn from_master(master: PayloadStore, caches: &[CacheState]) -> Self {
        let workers = caches.iter().map(|c| master.restrict(c)).collect();
        PayloadState { master, workers }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShuffleOutcome {
    pub decomposition: Decomposition,
    pub instances: Vec<CanonicalInstance>,
    pub groups: Vec<Vec<RedundancyGroup>>,
    /// Graph-based broadcast over all subgraphs, labels in global file ids.
    pub transmitted: Vec<SubMessage>,
    pub demands: Vec<DemandSet>,
    pub traces: Vec<DecodeTrace>,
    pub oracle: Vec<OracleReport>,
    pub load: LoadValue,
    #[serde(skip)]
    pub decoded_payloads: Option<Vec<BTreeMap<SubfileLabel, Vec<u8>>>>,
    pub payloads_match: Option<bool>,
}

impl ShuffleOutcome {
    pub fn gammas(&self) -> &[usize] {
        &self.decomposition.gammas
    }

    /// Every worker's trace covers its demand, the oracle agrees, and replayed bytes match.
    pub fn verified(&self) -> bool {
        self.oracle.iter().all(|r| r.decodable)
            && self
                .traces
                .iter()
                .zip(&self.demands)
                .all(|(t, d)| t.targets() == d.subfiles && t.steps.len() == d.subfiles.len())
            && self.payloads_match != Some(false)
    }
}

fn localize(inst: &CanonicalInstance, m: &SubMessage) -> SubMessage {
    SubMessage {
        subgraph: m.subgraph,
        delta: m.delta,
        support: m.support.iter().map(|l| inst.to_local(l).expect("label in subgraph")).collect(),
        payload: m.payload.clone(),
    }
}

fn globalize(inst: &CanonicalInstance, m: &SubMessage) -> SubMessage {
    SubMessage {
        subgraph: m.subgraph,
        delta: m.delta,
        support: m.support.iter().map(|l| inst.to_global(l)).collect(),
        payload: m.payload.clone(),
    }
}

/// Runs encode, decode and verification for a canonical-`u` assignment and a decomposition
/// of its transition graph.
pub fn execute_shuffle(
    params: &SystemParams,
    assignment: &Assignment,
    caches: &[CacheState],
    decomposition: &Decomposition,
    payloads: Option<&PayloadState>,
) -> Result<ShuffleOutcome> {
    assignment.check_params(params)?;
    if !assignment.is_canonical() {
        return Err(ShuffleError::InvalidAssignment(
            "execute_shuffle needs a canonical current assignment".into(),
        ));
    }
    let shat = params.shat();
    let universe = partition_files(params, assignment);
    let demands = demand_sets(&universe, assignment, caches);

    let mut instances = Vec::new();
    let mut groups = Vec::new();
    let mut transmitted = Vec::new();
    let mut full_local = Vec::new();
    for (m, g) in decomposition.subgraphs.iter().enumerate() {
        let inst = CanonicalInstance::from_graph(shat, g)?;
        let gs = redundancy_groups(&inst);
        let mut sent = Vec::new();
        for mut msg in encode_graph_based(&inst) {
            msg.subgraph = m;
            let mut global = globalize(&inst, &msg);
            if let Some(p) = payloads {
                global.attach_payload(&p.master)?;
            }
            sent.push(global);
        }
        // Receivers rebuild the dropped members from what was sent.
        let local: Vec<SubMessage> = sent.iter().map(|x| localize(&inst, x)).collect();
        let mut full = reconstruct_omitted(&local, &gs)?;
        for x in full.iter_mut() {
            x.subgraph = m;
        }
        full_local.push(full);
        transmitted.extend(sent);
        instances.push(inst);
        groups.push(gs);
    }
    let full_global: Vec<SubMessage> = instances
        .iter()
        .zip(&full_local)
        .flat_map(|(inst, ms)| ms.iter().map(|m| globalize(inst, m)))
        .collect();

    let mut traces = Vec::with_capacity(caches.len());
    for cache in caches {
        let mut steps = Vec::new();
        for (m, (inst, msgs)) in instances.iter().zip(&full_local).enumerate() {
            let t = decode_worker(inst, cache.worker, |l| cache.contains(&inst.to_global(l)), msgs)?;
            for mut s in t.steps {
                s.subgraph = m;
                s.target = inst.to_global(&s.target);
                s.cancelled = s.cancelled.iter().map(|l| inst.to_global(l)).collect();
                steps.push(s);
            }
        }
        traces.push(DecodeTrace {
            worker: cache.worker,
            steps,
        });
    }

    let (decoded_payloads, payloads_match) = match payloads {
        Some(p) => {
            let mut all = Vec::with_capacity(traces.len());
            let mut ok = true;
            for (t, known) in traces.iter().zip(&p.workers) {
                let mut known = known.clone();
                let got = replay_payloads(t, &full_global, &mut known)?;
                ok &= got.iter().all(|(l, b)| p.master.get(l) == Some(b));
                all.push(got);
            }
            (Some(all), Some(ok))
        }
        None => (None, None),
    };

    let oracle = caches
        .iter()
        .zip(&demands)
        .map(|(c, d)| gf2_decodability_oracle(c, &transmitted, &d.subfiles))
        .collect();
    let load = measured_load(&transmitted, params);
    Ok(ShuffleOutcome {
        decomposition: decomposition.clone(),
        instances,
        groups,
        transmitted,
        demands,
        traces,
        oracle,
        load,
        decoded_payloads,
        payloads_match,
    })
}

/// Subfiles each worker can see after the round: cache plus decoded.
pub fn available_after(caches: &[CacheState], outcome: &ShuffleOutcome) -> Vec<BTreeSet<SubfileLabel>> {
    caches
        .iter()
        .zip(&outcome.traces)
        .map(|(c, t)| c.labels().copied().chain(t.targets()).collect())
        .collect()
}
