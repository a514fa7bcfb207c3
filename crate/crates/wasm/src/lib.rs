//! Browser bindings. Each export wraps a plain function returning a JSON string so the same
//! logic runs under native tests.

use serde_json::{json, Value};
use shuffle_core::analysis::{load_universal, tradeoff_curve, worst_case_load};
use shuffle_core::decomposition::{decompose, search_decompositions};
use shuffle_core::delivery::{encode_universal, redundancy_groups};
use shuffle_core::harness::tradeoff_svg;
use shuffle_core::model::{canonicalize_assignment, AssignmentFile};
use shuffle_core::placement::place_caches;
use shuffle_core::protocol::execute_shuffle;
use shuffle_core::{Assignment, CanonicalInstance, FileTransitionGraph, SubfileLabel, SystemParams};
use wasm_bindgen::prelude::*;

const MAX_DEMO_WORKERS: usize = 12;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn name(l: &SubfileLabel, k: usize) -> String {
    if k < 10 && l.file <= 26 {
        l.short_name()
    } else {
        l.to_string()
    }
}

pub fn tradeoff_report(k: usize, gamma: usize) -> Result<String, String> {
    if k == 0 || k > MAX_DEMO_WORKERS {
        return Err(format!("K must be between 1 and {MAX_DEMO_WORKERS}"));
    }
    if gamma == 0 || gamma > k {
        return Err(format!("gamma must be between 1 and K = {k}"));
    }
    let curve = tradeoff_curve(k, gamma);
    let points = |pts: &[(usize, shuffle_core::LoadValue)]| -> Vec<Value> {
        pts.iter()
            .map(|(s, r)| json!({ "s": s, "load": r, "value": r.to_f64(), "universal": load_universal(k, *s) }))
            .collect()
    };
    Ok(json!({
        "k": k,
        "gamma": gamma,
        "points": points(&curve.corner_points),
        "hull": points(&curve.hull),
        "svg": tradeoff_svg(&curve),
    })
    .to_string())
}

fn parse_next(text: &str) -> Result<Vec<usize>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| format!("not a worker index: {t:?}")))
        .collect()
}

/// Broadcast for `N = K`, where worker `i` next processes file `next[i-1]`.
pub fn encode_report(shat: usize, next: &str) -> Result<String, String> {
    let next = parse_next(next)?;
    let k = next.len();
    if k == 0 || k > MAX_DEMO_WORKERS {
        return Err(format!("give between 1 and {MAX_DEMO_WORKERS} entries"));
    }
    let params = SystemParams::canonical(k, shat).map_err(err)?;
    let a = Assignment::from_permutation(&next).map_err(err)?;
    let inst = CanonicalInstance::from_permutation(shat, &next).map_err(err)?;
    let groups = redundancy_groups(&inst);
    let dropped: Vec<_> = groups.iter().map(|g| g.dropped).collect();
    let messages: Vec<Value> = encode_universal(&inst)
        .iter()
        .map(|m| {
            json!({
                "delta": m.delta,
                "terms": m.support.iter().map(|l| name(l, k)).collect::<Vec<_>>(),
                "dropped": dropped.contains(&m.delta),
            })
        })
        .collect();
    let g = FileTransitionGraph::from_assignment(&a);
    let outcome = decompose(&g)
        .and_then(|d| execute_shuffle(&params, &a, &place_caches(&params, &a), &d, None))
        .map_err(err)?;
    Ok(json!({
        "k": k,
        "shat": shat,
        "cycles": inst.cycles(),
        "gamma": inst.gamma(),
        "messages": messages,
        "groups": groups,
        "sent": outcome.transmitted.len(),
        "load": outcome.load,
        "universal": load_universal(k, shat),
        "verified": outcome.verified(),
    })
    .to_string())
}

/// Decomposition of a scenario in the `{"K","N","S","u","d"}` format.
pub fn decompose_report(scenario: &str, budget: usize, seed: u64) -> Result<String, String> {
    let (params, a) = AssignmentFile::from_json(scenario).map_err(err)?;
    if params.n_workers > MAX_DEMO_WORKERS {
        return Err(format!("K must be at most {MAX_DEMO_WORKERS}"));
    }
    let (a, _) = canonicalize_assignment(&a);
    let g = FileTransitionGraph::from_assignment(&a);
    let first = decompose(&g).map_err(err)?;
    let best = if budget > 0 {
        search_decompositions(&g, params.shat(), budget, seed).map_err(err)?.best
    } else {
        first.clone()
    };
    let outcome = execute_shuffle(&params, &a, &place_caches(&params, &a), &best, None).map_err(err)?;
    Ok(json!({
        "gammas": best.gammas,
        "load": outcome.load,
        "first_gammas": first.gammas,
        "first_load": first.load(params.shat()),
        "worst": worst_case_load(params.n_files, params.n_workers, params.shat()),
        "subgraphs": best.edge_lists(),
        "verified": outcome.verified(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn tradeoff(k: usize, gamma: usize) -> Result<String, JsValue> {
    tradeoff_report(k, gamma).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn encode(shat: usize, next: &str) -> Result<String, JsValue> {
    encode_report(shat, next).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = decomposeScenario)]
pub fn decompose_scenario(scenario: &str, budget: usize, seed: u64) -> Result<String, JsValue> {
    decompose_report(scenario, budget, seed).map_err(|e| JsValue::from_str(&e))
}
