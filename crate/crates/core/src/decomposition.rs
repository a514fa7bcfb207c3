//! Splitting an `N/K`-regular transition graph into perfect matchings.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::load_decomposition;
use crate::error::{Result, ShuffleError};
use crate::load::LoadValue;
use crate::model::{FileTransitionGraph, TransitionEdge, WorkerId};

/// Left side: workers at the current iteration; right side: the next iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteShuffleGraph {
    pub n_workers: usize,
    pub edges: Vec<TransitionEdge>,
}

impl BipartiteShuffleGraph {
    pub fn degree(&self) -> usize {
        self.edges.len() / self.n_workers
    }

    fn check_regular(&self) -> Result<usize> {
        FileTransitionGraph::from_edges(self.n_workers, self.edges.clone()).map(|g| g.degree())
    }

    pub fn without(&self, removed: &[TransitionEdge]) -> BipartiteShuffleGraph {
        let gone: BTreeSet<_> = removed.iter().map(|e| e.file).collect();
        BipartiteShuffleGraph {
            n_workers: self.n_workers,
            edges: self.edges.iter().filter(|e| !gone.contains(&e.file)).copied().collect(),
        }
    }
}

pub fn build_bipartite(g: &FileTransitionGraph) -> BipartiteShuffleGraph {
    BipartiteShuffleGraph {
        n_workers: g.n_workers(),
        edges: g.edges().to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingBackend {
    #[default]
    AugmentingPath,
    Hungarian,
}

/// Kuhn's augmenting-path matching, scanning each worker's edges in `edges` order.
fn kuhn(n: usize, edges: &[TransitionEdge]) -> Option<Vec<TransitionEdge>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (i, e) in edges.iter().enumerate() {
        adj[e.from].push(i);
    }
    let mut right: Vec<Option<usize>> = vec![None; n + 1];

    fn augment(
        u: WorkerId,
        adj: &[Vec<usize>],
        edges: &[TransitionEdge],
        right: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &ei in &adj[u] {
            let v = edges[ei].to;
            if seen[v] {
                continue;
            }
            seen[v] = true;
            let free = match right[v] {
                None => true,
                Some(prev) => augment(edges[prev].from, adj, edges, right, seen),
            };
            if free {
                right[v] = Some(ei);
                return true;
            }
        }
        false
    }

    for u in 1..=n {
        let mut seen = vec![false; n + 1];
        if !augment(u, &adj, edges, &mut right, &mut seen) {
            return None;
        }
    }
    let mut m: Vec<TransitionEdge> = right[1..].iter().map(|e| edges[e.expect("perfect")]).collect();
    m.sort_by_key(|e| e.from);
    Some(m)
}

/// Minimum-cost assignment on `cost` (square), potentials form.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Cost `G(i,j)` is the multiplicity of edges `i → j`; absent pairs are forbidden.
fn hungarian_matching(h: &BipartiteShuffleGraph) -> Option<Vec<TransitionEdge>> {
    let n = h.n_workers;
    let forbidden = (h.edges.len() as i64 + 1) * (n as i64 + 1);
    let mut cost = vec![vec![0i64; n]; n];
    for e in &h.edges {
        cost[e.from - 1][e.to - 1] += 1;
    }
    for row in cost.iter_mut() {
        for c in row.iter_mut() {
            if *c == 0 {
                *c = forbidden;
            }
        }
    }
    let assign = hungarian(&cost);
    let mut m = Vec::with_capacity(n);
    for (i, &j) in assign.iter().enumerate() {
        let e = h
            .edges
            .iter()
            .filter(|e| e.from == i + 1 && e.to == j + 1)
            .min_by_key(|e| e.file)?;
        m.push(*e);
    }
    Some(m)
}

pub fn extract_perfect_matching(h: &BipartiteShuffleGraph) -> Result<Vec<TransitionEdge>> {
    extract_perfect_matching_with(h, MatchingBackend::AugmentingPath)
}

pub fn extract_perfect_matching_with(
    h: &BipartiteShuffleGraph,
    backend: MatchingBackend,
) -> Result<Vec<TransitionEdge>> {
    h.check_regular()?;
    let m = match backend {
        MatchingBackend::AugmentingPath => kuhn(h.n_workers, &h.edges),
        MatchingBackend::Hungarian => hungarian_matching(h),
    };
    m.ok_or_else(|| ShuffleError::NotRegular("no perfect matching in a regular graph".into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub subgraphs: Vec<FileTransitionGraph>,
    pub gammas: Vec<usize>,
}

impl Decomposition {
    fn from_matchings(k: usize, matchings: Vec<Vec<TransitionEdge>>) -> Result<Self> {
        let subgraphs = matchings
            .into_iter()
            .map(|m| FileTransitionGraph::from_edges(k, m))
            .collect::<Result<Vec<_>>>()?;
        let gammas = subgraphs.iter().map(|g| g.gamma().expect("unit degrees")).collect();
        Ok(Decomposition { subgraphs, gammas })
    }

    pub fn n_workers(&self) -> usize {
        self.subgraphs.first().map_or(0, |g| g.n_workers())
    }

    pub fn load(&self, shat: usize) -> LoadValue {
        load_decomposition(self.n_workers(), shat, &self.gammas)
    }

    pub fn sorted_gammas(&self) -> Vec<usize> {
        let mut g = self.gammas.clone();
        g.sort_unstable();
        g
    }

    /// Subgraph edge lists, the wire form.
    pub fn edge_lists(&self) -> Vec<Vec<TransitionEdge>> {
        self.subgraphs.iter().map(|g| g.edges().to_vec()).collect()
    }

    /// Edges partition the parent and every part has unit degrees.
    pub fn is_valid_for(&self, parent: &FileTransitionGraph) -> bool {
        let mut all: Vec<TransitionEdge> = self.subgraphs.iter().flat_map(|g| g.edges().to_vec()).collect();
        all.sort();
        let mut want = parent.edges().to_vec();
        want.sort();
        all == want
            && self.subgraphs.len() == parent.degree()
            && self.subgraphs.iter().all(|g| {
                g.n_workers() == parent.n_workers()
                    && g.out_degrees().iter().all(|&d| d == 1)
                    && g.in_degrees().iter().all(|&d| d == 1)
            })
    }
}

/// Repeatedly peels perfect matchings off the residual graph.
pub fn decompose(g: &FileTransitionGraph) -> Result<Decomposition> {
    decompose_with(g, MatchingBackend::AugmentingPath)
}

pub fn decompose_with(g: &FileTransitionGraph, backend: MatchingBackend) -> Result<Decomposition> {
    peel(build_bipartite(g), backend)
}

fn peel(mut h: BipartiteShuffleGraph, backend: MatchingBackend) -> Result<Decomposition> {
    let k = h.n_workers;
    let mut matchings = Vec::new();
    while !h.edges.is_empty() {
        let m = extract_perfect_matching_with(&h, backend)?;
        h = h.without(&m);
        matchings.push(m);
    }
    Decomposition::from_matchings(k, matchings)
}

/// All perfect matchings containing `pivot`, by backtracking over left vertices.
fn matchings_through(h: &BipartiteShuffleGraph, pivot: TransitionEdge, cap: usize) -> Option<Vec<Vec<TransitionEdge>>> {
    let n = h.n_workers;
    let mut by_from: Vec<Vec<TransitionEdge>> = vec![Vec::new(); n + 1];
    for e in &h.edges {
        by_from[e.from].push(*e);
    }
    by_from[pivot.from] = vec![pivot];
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(n);
    let mut used = vec![false; n + 1];

    fn rec(
        u: usize,
        n: usize,
        by_from: &[Vec<TransitionEdge>],
        used: &mut [bool],
        chosen: &mut Vec<TransitionEdge>,
        out: &mut Vec<Vec<TransitionEdge>>,
        cap: usize,
    ) -> bool {
        if u > n {
            out.push(chosen.clone());
            return out.len() <= cap;
        }
        for e in &by_from[u] {
            if used[e.to] {
                continue;
            }
            used[e.to] = true;
            chosen.push(*e);
            let ok = rec(u + 1, n, by_from, used, chosen, out, cap);
            chosen.pop();
            used[e.to] = false;
            if !ok {
                return false;
            }
        }
        true
    }

    rec(1, n, &by_from, &mut used, &mut chosen, &mut out, cap).then_some(out)
}

/// Every distinct decomposition (as a set of matchings), or `None` if there are more than `cap`.
pub fn enumerate_decompositions(g: &FileTransitionGraph, cap: usize) -> Option<Vec<Decomposition>> {
    let k = g.n_workers();
    let mut out = Vec::new();
    let mut stack = Vec::new();

    fn rec(
        h: BipartiteShuffleGraph,
        stack: &mut Vec<Vec<TransitionEdge>>,
        out: &mut Vec<Vec<Vec<TransitionEdge>>>,
        cap: usize,
    ) -> bool {
        let Some(pivot) = h.edges.iter().min_by_key(|e| e.file).copied() else {
            out.push(stack.clone());
            return out.len() <= cap;
        };
        let Some(ms) = matchings_through(&h, pivot, cap) else {
            return false;
        };
        for m in ms {
            let rest = h.without(&m);
            stack.push(m);
            let ok = rec(rest, stack, out, cap);
            stack.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    if !rec(build_bipartite(g), &mut stack, &mut out, cap) {
        return None;
    }
    out.into_iter()
        .map(|ms| Decomposition::from_matchings(k, ms).ok())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: Decomposition,
    pub load: LoadValue,
    pub explored: usize,
    pub exhaustive: bool,
}

/// Lowest-load decomposition: exhaustive when at most `budget` exist, otherwise `budget`
/// randomized edge-order trials seeded by `seed`.
pub fn search_decompositions(
    g: &FileTransitionGraph,
    shat: usize,
    budget: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    let budget = budget.max(1);
    let (candidates, exhaustive) = match enumerate_decompositions(g, budget) {
        Some(all) => (all, true),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v = Vec::with_capacity(budget);
            for _ in 0..budget {
                let mut h = build_bipartite(g);
                h.edges.shuffle(&mut rng);
                v.push(peel(h, MatchingBackend::AugmentingPath)?);
            }
            (v, false)
        }
    };
    let explored = candidates.len();
    let mut best: Option<(LoadValue, Vec<usize>, Decomposition)> = None;
    for d in candidates {
        let key = (d.load(shat), d.sorted_gammas());
        if best.as_ref().is_none_or(|(l, s, _)| (&key.0, &key.1) < (l, s)) {
            best = Some((key.0, key.1, d));
        }
    }
    let (load, _, best) = best.expect("budget is at least one");
    Ok(SearchOutcome {
        best,
        load,
        explored,
        exhaustive,
    })
}
