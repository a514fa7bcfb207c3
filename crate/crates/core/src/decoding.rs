//! Worker-side recovery of demanded subfiles from the cache and the broadcast.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::delivery::{xor_supports, RedundancyGroup, SubMessage};
use crate::error::{Result, ShuffleError};
use crate::instance::CanonicalInstance;
use crate::model::{SubfileLabel, WorkerId, WorkerSet};
use crate::placement::xor_into;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeMethod {
    DirectSuppress,
    SuccessiveCancel,
    IgnoredSum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStep {
    pub subgraph: usize,
    pub target: SubfileLabel,
    pub method: DecodeMethod,
    pub sources: Vec<WorkerSet>,
    /// Everything XORed out of the sources besides the target.
    pub cancelled: Vec<SubfileLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub worker: WorkerId,
    pub steps: Vec<DecodeStep>,
}

impl DecodeTrace {
    pub fn targets(&self) -> BTreeSet<SubfileLabel> {
        self.steps.iter().map(|s| s.target).collect()
    }
}

fn by_delta(messages: &[SubMessage]) -> HashMap<WorkerSet, &SubMessage> {
    messages.iter().map(|m| (m.delta, m)).collect()
}

/// Rebuilds each group's dropped member as the XOR of the others.
pub fn reconstruct_omitted(received: &[SubMessage], groups: &[RedundancyGroup]) -> Result<Vec<SubMessage>> {
    let mut all: BTreeMap<WorkerSet, SubMessage> =
        received.iter().map(|m| (m.delta, m.clone())).collect();
    let subgraph = received.first().map_or(0, |m| m.subgraph);
    for g in groups {
        let missing: Vec<WorkerSet> = g.members.iter().filter(|d| !all.contains_key(d)).copied().collect();
        match missing.len() {
            0 => {}
            1 => {
                let present: Vec<&SubMessage> = g.members.iter().filter_map(|d| all.get(d)).collect();
                let support = xor_supports(present.iter().map(|m| &m.support));
                let len = received.iter().find_map(|m| m.payload.as_ref().map(Vec::len));
                let payload = if let (Some(len), true) = (len, present.iter().all(|m| m.payload.is_some())) {
                    let mut acc = vec![0u8; len];
                    for m in &present {
                        xor_into(&mut acc, m.payload.as_ref().expect("checked"));
                    }
                    Some(acc)
                } else {
                    None
                };
                all.insert(
                    missing[0],
                    SubMessage {
                        subgraph,
                        delta: missing[0],
                        support,
                        payload,
                    },
                );
            }
            n => {
                return Err(ShuffleError::MissingGroupMember {
                    psi: g.psi.clone(),
                    missing: n,
                })
            }
        }
    }
    Ok(all.into_values().collect())
}

fn residual(
    support: &BTreeSet<SubfileLabel>,
    known: impl Fn(&SubfileLabel) -> bool,
) -> Vec<SubfileLabel> {
    support.iter().filter(|l| !known(l)).copied().collect()
}

fn demanded(inst: &CanonicalInstance, w: WorkerId, cached: &impl Fn(&SubfileLabel) -> bool) -> Vec<SubfileLabel> {
    let f = inst.next(w);
    inst.all_workers()
        .without(f)
        .subsets(inst.shat() - 1)
        .into_iter()
        .map(|g| SubfileLabel::new(f, g))
        .filter(|l| !cached(l))
        .collect()
}

/// Decoding at a worker `ℓ < K`. Labels are local to the instance.
pub fn decode_regular(
    inst: &CanonicalInstance,
    worker: WorkerId,
    cached: impl Fn(&SubfileLabel) -> bool,
    messages: &[SubMessage],
) -> Result<DecodeTrace> {
    let k = inst.k();
    assert!(worker >= 1 && worker < k, "regular decoding needs a worker below K");
    let f = inst.next(worker);
    let lookup = by_delta(messages);
    let (mut targets, later): (Vec<_>, Vec<_>) = demanded(inst, worker, &cached)
        .into_iter()
        .partition(|l| !l.gamma.contains(k));
    targets.extend(later);

    let mut decoded: BTreeSet<SubfileLabel> = BTreeSet::new();
    let mut steps = Vec::with_capacity(targets.len());
    for target in targets {
        let via_ignored = target.gamma.contains(k);
        let source = if via_ignored {
            debug_assert!(!target.gamma.contains(f));
            target.gamma.without(k).with(worker).with(f)
        } else {
            target.gamma.with(worker)
        };
        let msg = lookup.get(&source).ok_or(ShuffleError::MissingMessage(source))?;
        let left = if via_ignored {
            residual(&msg.support, |l| cached(l) || decoded.contains(l))
        } else {
            residual(&msg.support, &cached)
        };
        if left != [target] {
            return Err(ShuffleError::DecodeFailure {
                worker,
                target,
                residual: left,
            });
        }
        let cancelled: Vec<SubfileLabel> = msg.support.iter().filter(|l| **l != target).copied().collect();
        let method = if cancelled.iter().any(|l| decoded.contains(l)) {
            DecodeMethod::SuccessiveCancel
        } else {
            DecodeMethod::DirectSuppress
        };
        decoded.insert(target);
        steps.push(DecodeStep {
            subgraph: msg.subgraph,
            target,
            method,
            sources: vec![source],
            cancelled,
        });
    }
    Ok(DecodeTrace { worker, steps })
}

/// Decoding at worker `K` from sums of sub-messages.
pub fn decode_ignored(
    inst: &CanonicalInstance,
    cached: impl Fn(&SubfileLabel) -> bool,
    messages: &[SubMessage],
) -> Result<DecodeTrace> {
    let k = inst.k();
    let lookup = by_delta(messages);
    let mut steps = Vec::new();
    for target in demanded(inst, k, &cached) {
        let sources: Vec<WorkerSet> = WorkerSet::range(k - 1)
            .difference(target.gamma)
            .iter()
            .map(|l| target.gamma.with(l))
            .collect();
        let mut supports = Vec::with_capacity(sources.len());
        for s in &sources {
            supports.push(&lookup.get(s).ok_or(ShuffleError::MissingMessage(*s))?.support);
        }
        let sum = xor_supports(supports);
        let left = residual(&sum, &cached);
        if left != [target] {
            return Err(ShuffleError::DecodeFailure {
                worker: k,
                target,
                residual: left,
            });
        }
        steps.push(DecodeStep {
            subgraph: messages.first().map_or(0, |m| m.subgraph),
            target,
            method: DecodeMethod::IgnoredSum,
            sources,
            cancelled: sum.into_iter().filter(|l| *l != target).collect(),
        });
    }
    Ok(DecodeTrace { worker: k, steps })
}

pub fn decode_worker(
    inst: &CanonicalInstance,
    worker: WorkerId,
    cached: impl Fn(&SubfileLabel) -> bool,
    messages: &[SubMessage],
) -> Result<DecodeTrace> {
    if worker == inst.k() {
        decode_ignored(inst, cached, messages)
    } else {
        decode_regular(inst, worker, cached, messages)
    }
}

/// Replays a trace on real bytes. `known` holds the worker's cached payloads; decoded payloads
/// are added to it as steps complete.
pub fn replay_payloads(
    trace: &DecodeTrace,
    messages: &[SubMessage],
    known: &mut BTreeMap<SubfileLabel, Vec<u8>>,
) -> Result<BTreeMap<SubfileLabel, Vec<u8>>> {
    let lookup: HashMap<(usize, WorkerSet), &SubMessage> =
        messages.iter().map(|m| ((m.subgraph, m.delta), m)).collect();
    let mut out = BTreeMap::new();
    for step in &trace.steps {
        let mut acc: Option<Vec<u8>> = None;
        let add = |acc: &mut Option<Vec<u8>>, p: &[u8]| match acc.as_mut() {
            Some(a) => xor_into(a, p),
            None => *acc = Some(p.to_vec()),
        };
        for s in &step.sources {
            let m = lookup
                .get(&(step.subgraph, *s))
                .ok_or(ShuffleError::MissingMessage(*s))?;
            match &m.payload {
                Some(p) => add(&mut acc, p),
                // An empty XOR is all zeros.
                None if m.support.is_empty() => {}
                None => return Err(ShuffleError::MissingPayload(step.target)),
            }
        }
        for l in &step.cancelled {
            let p = known.get(l).ok_or(ShuffleError::MissingPayload(*l))?;
            add(&mut acc, p);
        }
        let acc = acc
            .or_else(|| known.values().next().map(|v| vec![0u8; v.len()]))
            .ok_or(ShuffleError::MissingPayload(step.target))?;
        known.insert(step.target, acc.clone());
        out.insert(step.target, acc);
    }
    Ok(out)
}
