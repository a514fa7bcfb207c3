//! Subfile partitioning, symmetric cache placement and demand sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::load::LoadValue;
use crate::model::{Assignment, FileId, SubfileLabel, SystemParams, WorkerId, WorkerSet};

/// All non-dummy subfiles, with a dense index.
#[derive(Debug, Clone)]
pub struct SubfileUniverse {
    params: SystemParams,
    owners: Vec<WorkerId>,
    gammas_by_owner: Vec<Vec<WorkerSet>>,
    rank_by_owner: Vec<HashMap<WorkerSet, usize>>,
}

impl SubfileUniverse {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.universe_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn owner(&self, file: FileId) -> WorkerId {
        self.owners[file - 1]
    }

    /// Subscripts of `file`'s subfiles, lexicographically.
    pub fn gammas(&self, file: FileId) -> &[WorkerSet] {
        &self.gammas_by_owner[self.owner(file) - 1]
    }

    pub fn file_subfiles(&self, file: FileId) -> impl Iterator<Item = SubfileLabel> + '_ {
        self.gammas(file)
            .iter()
            .map(move |&g| SubfileLabel::new(file, g))
    }

    pub fn labels(&self) -> impl Iterator<Item = SubfileLabel> + '_ {
        (1..=self.params.n_files).flat_map(move |f| self.file_subfiles(f))
    }

    pub fn contains(&self, label: &SubfileLabel) -> bool {
        self.index_of(label).is_some()
    }

    pub fn index_of(&self, label: &SubfileLabel) -> Option<usize> {
        if label.file == 0 || label.file > self.params.n_files {
            return None;
        }
        let rank = self.rank_by_owner[self.owner(label.file) - 1].get(&label.gamma)?;
        Some((label.file - 1) * self.params.subfiles_per_file() + rank)
    }

    pub fn label_at(&self, index: usize) -> Option<SubfileLabel> {
        let per = self.params.subfiles_per_file();
        let file = index / per + 1;
        if file > self.params.n_files {
            return None;
        }
        Some(SubfileLabel::new(file, self.gammas(file)[index % per]))
    }
}

/// Builds the subfile universe; the owner of a file is its current processor.
pub fn partition_files(params: &SystemParams, assignment: &Assignment) -> SubfileUniverse {
    let k = params.n_workers;
    let shat = params.shat();
    let gammas_by_owner: Vec<Vec<WorkerSet>> = (1..=k)
        .map(|o| params.all_workers().without(o).subsets(shat - 1))
        .collect();
    let rank_by_owner = gammas_by_owner
        .iter()
        .map(|gs| gs.iter().enumerate().map(|(r, &g)| (g, r)).collect())
        .collect();
    SubfileUniverse {
        params: *params,
        owners: (1..=params.n_files).map(|f| assignment.owner_now(f)).collect(),
        gammas_by_owner,
        rank_by_owner,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheState {
    pub worker: WorkerId,
    pub processing: BTreeSet<SubfileLabel>,
    pub excess: BTreeSet<SubfileLabel>,
}

impl CacheState {
    pub fn contains(&self, label: &SubfileLabel) -> bool {
        self.processing.contains(label) || self.excess.contains(label)
    }

    pub fn len(&self) -> usize {
        self.processing.len() + self.excess.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> impl Iterator<Item = &SubfileLabel> {
        self.processing.iter().chain(self.excess.iter())
    }

    /// Cache occupancy in file units.
    pub fn size_in_files(&self, params: &SystemParams) -> LoadValue {
        LoadValue::new(self.len() as i64, params.subfiles_per_file() as i64)
    }

    /// Files whose subfiles make up the processing part.
    pub fn processed_files(&self) -> BTreeSet<FileId> {
        self.processing.iter().map(|l| l.file).collect()
    }
}

/// Worker `i` stores every subfile of its own files and every `F^ℓ_Γ` with `i ∈ Γ`.
pub fn place_caches(params: &SystemParams, assignment: &Assignment) -> Vec<CacheState> {
    let universe = partition_files(params, assignment);
    place_caches_in(&universe)
}

pub fn place_caches_in(universe: &SubfileUniverse) -> Vec<CacheState> {
    let k = universe.params().n_workers;
    let mut caches: Vec<CacheState> = (1..=k)
        .map(|w| CacheState {
            worker: w,
            processing: BTreeSet::new(),
            excess: BTreeSet::new(),
        })
        .collect();
    for label in universe.labels() {
        let owner = universe.owner(label.file);
        caches[owner - 1].processing.insert(label);
        for w in label.gamma.iter() {
            caches[w - 1].excess.insert(label);
        }
    }
    caches
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandSet {
    pub worker: WorkerId,
    pub subfiles: BTreeSet<SubfileLabel>,
}

/// Subfiles of the worker's next files that its cache lacks.
pub fn demand_set(
    worker: WorkerId,
    params: &SystemParams,
    assignment: &Assignment,
    caches: &[CacheState],
) -> DemandSet {
    let universe = partition_files(params, assignment);
    demand_set_in(&universe, worker, assignment, &caches[worker - 1])
}

pub fn demand_set_in(
    universe: &SubfileUniverse,
    worker: WorkerId,
    assignment: &Assignment,
    cache: &CacheState,
) -> DemandSet {
    let subfiles = assignment
        .d(worker)
        .iter()
        .flat_map(|&f| universe.file_subfiles(f))
        .filter(|l| !cache.contains(l))
        .collect();
    DemandSet { worker, subfiles }
}

pub fn demand_sets(universe: &SubfileUniverse, assignment: &Assignment, caches: &[CacheState]) -> Vec<DemandSet> {
    caches
        .iter()
        .map(|c| demand_set_in(universe, c.worker, assignment, c))
        .collect()
}

/// Fraction of file subfiles cached at some worker of `workers`, averaged over files not
/// owned by any of them, for every `workers` of size `alpha`. Computed from cache contents.
pub fn measured_mu_alpha(
    params: &SystemParams,
    universe: &SubfileUniverse,
    caches: &[CacheState],
    alpha: usize,
) -> LoadValue {
    let per = params.subfiles_per_file() as i64;
    let mut total = LoadValue::zero();
    let mut count: i64 = 0;
    for file in 1..=params.n_files {
        let owner = universe.owner(file);
        for set in params.all_workers().without(owner).subsets(alpha) {
            let covered: BTreeSet<SubfileLabel> = set
                .iter()
                .flat_map(|w| {
                    caches[w - 1]
                        .labels()
                        .filter(|l| l.file == file)
                        .copied()
                        .collect::<Vec<_>>()
                })
                .collect();
            total = total + LoadValue::new(covered.len() as i64, per);
            count += 1;
        }
    }
    if count == 0 {
        return LoadValue::zero();
    }
    total * LoadValue::new(1, count)
}

/// Equal-length byte strings for every subfile, held by the master.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PayloadStore {
    pub len: usize,
    pub bytes: BTreeMap<SubfileLabel, Vec<u8>>,
}

impl PayloadStore {
    pub fn random(universe: &SubfileUniverse, len: usize, rng: &mut impl RngCore) -> Self {
        let bytes = universe
            .labels()
            .map(|l| {
                let mut b = vec![0u8; len];
                rng.fill_bytes(&mut b);
                (l, b)
            })
            .collect();
        PayloadStore { len, bytes }
    }

    pub fn get(&self, label: &SubfileLabel) -> Option<&Vec<u8>> {
        self.bytes.get(label)
    }

    /// The subset a worker holds in its cache.
    pub fn restrict(&self, cache: &CacheState) -> BTreeMap<SubfileLabel, Vec<u8>> {
        cache
            .labels()
            .filter_map(|l| self.bytes.get(l).map(|b| (*l, b.clone())))
            .collect()
    }
}

pub fn xor_into(acc: &mut [u8], other: &[u8]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a ^= b;
    }
}
