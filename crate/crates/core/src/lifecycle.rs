//! Cache updates after decoding, relabeling back to the canonical placement, and the round driver.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoding::DecodeTrace;
use crate::decomposition::{decompose, search_decompositions};
use crate::error::{Result, ShuffleError};
use crate::load::LoadValue;
use crate::model::{
    canonical_u, canonicalize_assignment, Assignment, FileId, FileRelabeling, FileTransitionGraph,
    SubfileLabel, SystemParams, WorkerId,
};
use crate::placement::{partition_files, place_caches, CacheState, DemandSet, PayloadStore};
use crate::protocol::{execute_shuffle, PayloadState};

/// Moves the next files into the processing part, drops their excess copies, and keeps the
/// fragments of outgoing files that the new processor's subscript requires.
pub fn update_caches(
    params: &SystemParams,
    assignment: &Assignment,
    caches: &[CacheState],
    demands: &[DemandSet],
) -> Result<Vec<CacheState>> {
    let universe = partition_files(params, assignment);
    let mut out = Vec::with_capacity(caches.len());
    for (cache, demand) in caches.iter().zip(demands) {
        let i = cache.worker;
        let available = |l: &SubfileLabel| cache.contains(l) || demand.subfiles.contains(l);
        let incoming: BTreeSet<FileId> = assignment.d(i).iter().copied().collect();
        let processing: BTreeSet<SubfileLabel> = incoming
            .iter()
            .flat_map(|&f| universe.file_subfiles(f))
            .collect();
        let kept: BTreeSet<SubfileLabel> = assignment
            .u(i)
            .iter()
            .flat_map(|&f| universe.file_subfiles(f))
            .filter(|l| l.gamma.contains(assignment.owner_next(l.file)))
            .collect();
        if let Some(l) = processing.iter().chain(&kept).find(|l| !available(l)) {
            return Err(ShuffleError::InfeasibleUpdate { worker: i, label: *l });
        }
        let excess = cache
            .excess
            .iter()
            .filter(|l| !incoming.contains(&l.file))
            .copied()
            .chain(kept)
            .collect();
        out.push(CacheState {
            worker: i,
            processing,
            excess,
        });
    }
    Ok(out)
}

/// Renames subfiles after a shuffle. A file moving from `w` to `v` takes the canonical slot of
/// `v` (its rank within `d(v)`), and `v` in its subscript is replaced by `w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabeling {
    pub files: FileRelabeling,
    from: Vec<WorkerId>,
    to: Vec<WorkerId>,
}

impl Relabeling {
    pub fn for_assignment(a: &Assignment) -> Relabeling {
        let q = a.files_per_worker();
        let mut forward = vec![0; a.n_files()];
        for (v, files) in a.d_sets().iter().enumerate() {
            for (slot, &f) in files.iter().enumerate() {
                forward[f - 1] = v * q + slot + 1;
            }
        }
        Relabeling {
            files: FileRelabeling { forward },
            from: (1..=a.n_files()).map(|f| a.owner_now(f)).collect(),
            to: (1..=a.n_files()).map(|f| a.owner_next(f)).collect(),
        }
    }

    pub fn apply(&self, l: &SubfileLabel) -> SubfileLabel {
        let (w, v) = (self.from[l.file - 1], self.to[l.file - 1]);
        let gamma = if w != v && l.gamma.contains(v) {
            l.gamma.without(v).with(w)
        } else {
            l.gamma
        };
        SubfileLabel::new(self.files.apply(l.file), gamma)
    }
}

pub fn relabel_subfiles(caches: &[CacheState], assignment: &Assignment) -> (Vec<CacheState>, Relabeling) {
    let r = Relabeling::for_assignment(assignment);
    let out = caches
        .iter()
        .map(|c| CacheState {
            worker: c.worker,
            processing: c.processing.iter().map(|l| r.apply(l)).collect(),
            excess: c.excess.iter().map(|l| r.apply(l)).collect(),
        })
        .collect();
    (out, r)
}

/// Produces each round's assignment in current file names.
pub trait ShuffleSource {
    fn next_assignment(&mut self, round: usize, params: &SystemParams) -> Result<Assignment>;
}

impl<F> ShuffleSource for F
where
    F: FnMut(usize, &SystemParams) -> Result<Assignment>,
{
    fn next_assignment(&mut self, round: usize, params: &SystemParams) -> Result<Assignment> {
        self(round, params)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[derive(Default)]
pub struct RoundOptions {
    /// 0 takes the first decomposition found.
    pub search_budget: usize,
    pub seed: u64,
    /// 0 runs symbolically.
    pub payload_bytes: usize,
    /// `None` keeps full history.
    pub history_window: Option<usize>,
}


#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub gammas: Vec<usize>,
    pub load: LoadValue,
    pub verified: bool,
    pub traces: Vec<DecodeTrace>,
}

#[derive(Debug, Clone)]
pub struct RoundState {
    pub iteration: usize,
    pub caches: Vec<CacheState>,
    pub assignment_history: VecDeque<Assignment>,
    pub relabel_history: VecDeque<Relabeling>,
    /// `origin[f-1]` is the original id of the file currently named `f`.
    pub origin: Vec<FileId>,
    pub payloads: Option<PayloadState>,
    window: Option<usize>,
}

impl RoundState {
    pub fn new(params: &SystemParams, options: &RoundOptions) -> Self {
        let start = Assignment::with_canonical_u(canonical_u(params.n_workers, params.n_files))
            .expect("canonical assignment is valid");
        let caches = place_caches(params, &start);
        let payloads = (options.payload_bytes > 0).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let master = PayloadStore::random(&partition_files(params, &start), options.payload_bytes, &mut rng);
            PayloadState::from_master(master, &caches)
        });
        RoundState {
            iteration: 0,
            caches,
            assignment_history: VecDeque::new(),
            relabel_history: VecDeque::new(),
            origin: (1..=params.n_files).collect(),
            payloads,
            window: options.history_window,
        }
    }

    fn remember(&mut self, a: Assignment, r: Relabeling) {
        self.assignment_history.push_back(a);
        self.relabel_history.push_back(r);
        if let Some(w) = self.window {
            while self.assignment_history.len() > w {
                self.assignment_history.pop_front();
                self.relabel_history.pop_front();
            }
        }
    }

    /// One full round. Returns the record; on success the caches are canonical again.
    pub fn step(
        &mut self,
        params: &SystemParams,
        assignment: &Assignment,
        options: &RoundOptions,
    ) -> Result<RoundRecord> {
        let round = self.iteration;
        self.step_inner(params, assignment, options).map_err(|e| ShuffleError::Round {
            round,
            source: Box::new(e),
        })
    }

    fn step_inner(
        &mut self,
        params: &SystemParams,
        assignment: &Assignment,
        options: &RoundOptions,
    ) -> Result<RoundRecord> {
        let (a, _) = canonicalize_assignment(assignment);
        a.check_params(params)?;
        let g = FileTransitionGraph::from_assignment(&a);
        let decomposition = if options.search_budget > 0 {
            search_decompositions(&g, params.shat(), options.search_budget, options.seed ^ self.iteration as u64)?.best
        } else {
            decompose(&g)?
        };
        let outcome = execute_shuffle(params, &a, &self.caches, &decomposition, self.payloads.as_ref())?;
        if !outcome.verified() {
            return Err(ShuffleError::Verification(format!(
                "round {} failed decodability checks",
                self.iteration
            )));
        }
        let updated = update_caches(params, &a, &self.caches, &outcome.demands)?;
        let (relabeled, r) = relabel_subfiles(&updated, &a);
        let fresh = place_caches(
            params,
            &Assignment::with_canonical_u(canonical_u(params.n_workers, params.n_files))?,
        );
        if relabeled != fresh {
            return Err(ShuffleError::Verification(
                "relabeled caches differ from the canonical placement".into(),
            ));
        }

        if let (Some(p), Some(decoded)) = (self.payloads.as_mut(), outcome.decoded_payloads.as_ref()) {
            let mut workers = Vec::with_capacity(updated.len());
            for ((c, held), got) in updated.iter().zip(&p.workers).zip(decoded) {
                let mut next = BTreeMap::new();
                for l in c.labels() {
                    let b = held.get(l).or_else(|| got.get(l)).ok_or(ShuffleError::MissingPayload(*l))?;
                    next.insert(r.apply(l), b.clone());
                }
                workers.push(next);
            }
            let master = PayloadStore {
                len: p.master.len,
                bytes: p.master.bytes.iter().map(|(l, b)| (r.apply(l), b.clone())).collect(),
            };
            for (c, held) in relabeled.iter().zip(&workers) {
                if c.processing.iter().any(|l| held.get(l) != master.get(l)) {
                    return Err(ShuffleError::Verification(format!(
                        "worker {} holds bytes that differ from the master copy",
                        c.worker
                    )));
                }
            }
            *p = PayloadState { master, workers };
        }

        let mut origin = vec![0; self.origin.len()];
        for (old, &o) in self.origin.iter().enumerate() {
            origin[r.files.apply(old + 1) - 1] = o;
        }
        self.origin = origin;
        self.caches = relabeled;
        self.remember(a, r);
        self.iteration += 1;
        Ok(RoundRecord {
            round: self.iteration - 1,
            gammas: outcome.decomposition.gammas.clone(),
            load: outcome.load,
            verified: true,
            traces: outcome.traces,
        })
    }
}

/// Runs `rounds` consecutive shuffles from a fresh canonical placement.
pub fn run_rounds(
    params: &SystemParams,
    source: &mut impl ShuffleSource,
    rounds: usize,
    options: &RoundOptions,
) -> Result<(RoundState, Vec<RoundRecord>)> {
    params.validate()?;
    let mut state = RoundState::new(params, options);
    let mut records = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let a = source.next_assignment(t, params).map_err(|e| ShuffleError::Round {
            round: t,
            source: Box::new(e),
        })?;
        records.push(state.step(params, &a, options)?);
    }
    Ok((state, records))
}
