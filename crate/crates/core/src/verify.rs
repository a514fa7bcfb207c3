//! Exhaustive small-K sweeps over every permutation.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::load_graph_based;
use crate::decomposition::decompose;
use crate::delivery::{encode_graph_based, SubMessage};
use crate::gf2::gf2_decodability_oracle;
use crate::instance::CanonicalInstance;
use crate::model::{Assignment, FileTransitionGraph, SystemParams};
use crate::placement::{demand_sets, partition_files, place_caches};
use crate::protocol::execute_shuffle;

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepReport {
    pub k: usize,
    pub instances: usize,
    pub failures: Vec<String>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    (1..=k).permutations(k).collect()
}

/// Every `Ŝ` and every permutation of `[K]`: measured load equals the closed form, explicit
/// decoders succeed and the oracle certifies every worker.
pub fn optimality_sweep(k: usize) -> SweepReport {
    let cases: Vec<(usize, Vec<usize>)> = (1..=k)
        .flat_map(|s| permutations(k).into_iter().map(move |p| (s, p)))
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|(s, next)| {
            let params = SystemParams::canonical(k, *s).ok()?;
            let a = Assignment::from_permutation(next).ok()?;
            let g = FileTransitionGraph::from_assignment(&a);
            let gamma = g.gamma()?;
            let caches = place_caches(&params, &a);
            let outcome = match decompose(&g).and_then(|d| execute_shuffle(&params, &a, &caches, &d, None)) {
                Ok(o) => o,
                Err(e) => return Some(format!("K={k} S={s} d={next:?}: {e}")),
            };
            let want = load_graph_based(k, *s, gamma);
            if outcome.load != want {
                return Some(format!("K={k} S={s} d={next:?}: load {} expected {want}", outcome.load));
            }
            if !outcome.verified() {
                return Some(format!("K={k} S={s} d={next:?}: not decodable"));
            }
            None
        })
        .collect();
    SweepReport {
        k,
        instances: cases.len(),
        failures,
    }
}

/// Whether dropping any single transmitted sub-message leaves some worker unable to decode.
pub fn every_message_needed(params: &SystemParams, a: &Assignment, sent: &[SubMessage]) -> Option<usize> {
    let caches = place_caches(params, a);
    let demands = demand_sets(&partition_files(params, a), a, &caches);
    (0..sent.len()).find(|&skip| {
        let rest: Vec<SubMessage> = sent
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, m)| m.clone())
            .collect();
        caches
            .iter()
            .zip(&demands)
            .all(|(c, d)| gf2_decodability_oracle(c, &rest, &d.subfiles).decodable)
    })
}

/// Every transmitted sub-message is necessary, for every `Ŝ` and permutation of `[K]`.
pub fn minimality_probe(k: usize) -> SweepReport {
    let cases: Vec<(usize, Vec<usize>)> = (1..=k)
        .flat_map(|s| permutations(k).into_iter().map(move |p| (s, p)))
        .collect();
    let failures = cases
        .par_iter()
        .filter_map(|(s, next)| {
            let params = SystemParams::canonical(k, *s).ok()?;
            let inst = CanonicalInstance::from_permutation(*s, next).ok()?;
            let a = Assignment::from_permutation(next).ok()?;
            let sent = encode_graph_based(&inst);
            every_message_needed(&params, &a, &sent)
                .map(|i| format!("K={k} S={s} d={next:?}: {} is redundant", sent[i].delta))
        })
        .collect();
    SweepReport {
        k,
        instances: cases.len(),
        failures,
    }
}
