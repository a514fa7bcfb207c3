//! Workers, files, subfile labels, assignments and the file transition graph.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, ShuffleError};
use crate::load::binomial_usize;

/// 1-based worker index.
pub type WorkerId = usize;
/// 1-based file index.
pub type FileId = usize;

/// Worker sets are stored as bitmasks.
pub const MAX_WORKERS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_files: usize,
    pub n_workers: usize,
    pub cache_size: usize,
}

impl SystemParams {
    pub fn new(n_files: usize, n_workers: usize, cache_size: usize) -> Result<Self> {
        let p = SystemParams {
            n_files,
            n_workers,
            cache_size,
        };
        p.validate()?;
        Ok(p)
    }

    /// The `N = K` setting.
    pub fn canonical(n_workers: usize, cache_size: usize) -> Result<Self> {
        Self::new(n_workers, n_workers, cache_size)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k, s) = (self.n_files, self.n_workers, self.cache_size);
        if n == 0 || k == 0 || s == 0 {
            return Err(ShuffleError::InvalidParams(format!(
                "N={n}, K={k}, S={s} must all be positive"
            )));
        }
        if k > MAX_WORKERS {
            return Err(ShuffleError::InvalidParams(format!(
                "K={k} exceeds the supported maximum of {MAX_WORKERS}"
            )));
        }
        if n % k != 0 {
            return Err(ShuffleError::InvalidParams(format!("K={k} does not divide N={n}")));
        }
        let q = n / k;
        if s % q != 0 {
            return Err(ShuffleError::InvalidParams(format!("N/K={q} does not divide S={s}")));
        }
        if s < q || s > n {
            return Err(ShuffleError::InvalidParams(format!(
                "S={s} must lie between N/K={q} and N={n}"
            )));
        }
        Ok(())
    }

    pub fn files_per_worker(&self) -> usize {
        self.n_files / self.n_workers
    }

    /// Cache size in units of `N/K` files.
    pub fn shat(&self) -> usize {
        self.cache_size / self.files_per_worker()
    }

    pub fn subfiles_per_file(&self) -> usize {
        binomial_usize(self.n_workers - 1, self.shat() - 1)
    }

    pub fn universe_size(&self) -> usize {
        self.n_files * self.subfiles_per_file()
    }

    pub fn all_workers(&self) -> WorkerSet {
        WorkerSet::range(self.n_workers)
    }
}

/// A set of workers. Ordered lexicographically on its sorted members.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct WorkerSet(u64);

impl WorkerSet {
    pub const EMPTY: WorkerSet = WorkerSet(0);

    fn bit(w: WorkerId) -> u64 {
        assert!(
            (1..=MAX_WORKERS).contains(&w),
            "worker id {w} outside 1..={MAX_WORKERS}"
        );
        1u64 << (w - 1)
    }

    /// `{1, ..., k}`.
    pub fn range(k: usize) -> WorkerSet {
        if k >= 64 {
            WorkerSet(u64::MAX)
        } else {
            WorkerSet((1u64 << k) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> WorkerSet {
        WorkerSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, w: WorkerId) -> bool {
        (1..=MAX_WORKERS).contains(&w) && self.0 & Self::bit(w) != 0
    }

    pub fn with(self, w: WorkerId) -> WorkerSet {
        WorkerSet(self.0 | Self::bit(w))
    }

    pub fn without(self, w: WorkerId) -> WorkerSet {
        WorkerSet(self.0 & !Self::bit(w))
    }

    pub fn union(self, other: WorkerSet) -> WorkerSet {
        WorkerSet(self.0 | other.0)
    }

    pub fn intersection(self, other: WorkerSet) -> WorkerSet {
        WorkerSet(self.0 & other.0)
    }

    pub fn difference(self, other: WorkerSet) -> WorkerSet {
        WorkerSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: WorkerSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn max(self) -> Option<WorkerId> {
        if self.0 == 0 {
            None
        } else {
            Some(64 - self.0.leading_zeros() as usize)
        }
    }

    pub fn iter(self) -> impl Iterator<Item = WorkerId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(tz + 1)
            }
        })
    }

    pub fn to_vec(self) -> Vec<WorkerId> {
        self.iter().collect()
    }

    /// All `size`-subsets in lexicographic order.
    pub fn subsets(self, size: usize) -> Vec<WorkerSet> {
        self.iter()
            .combinations(size)
            .map(WorkerSet::from_iter)
            .collect()
    }
}

impl FromIterator<WorkerId> for WorkerSet {
    fn from_iter<I: IntoIterator<Item = WorkerId>>(iter: I) -> Self {
        iter.into_iter().fold(WorkerSet::EMPTY, WorkerSet::with)
    }
}

impl Ord for WorkerSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for WorkerSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for WorkerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.iter().join(","))
    }
}

impl fmt::Debug for WorkerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for WorkerSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for WorkerSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<WorkerId>::deserialize(d)?;
        if let Some(&bad) = v.iter().find(|&&w| !(1..=MAX_WORKERS).contains(&w)) {
            return Err(serde::de::Error::custom(format!("worker id {bad} out of range")));
        }
        Ok(v.into_iter().collect())
    }
}

/// Subfile `F^file_gamma`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubfileLabel {
    pub file: FileId,
    pub gamma: WorkerSet,
}

impl SubfileLabel {
    pub fn new(file: FileId, gamma: WorkerSet) -> Self {
        SubfileLabel { file, gamma }
    }

    /// Letter notation for small instances, e.g. `B_34` is file 2 with gamma {3,4}.
    /// Requires fewer than 27 files and fewer than 10 workers.
    pub fn short_name(&self) -> String {
        let letter = if (1..=26).contains(&self.file) {
            ((b'A' + (self.file - 1) as u8) as char).to_string()
        } else {
            format!("F{}", self.file)
        };
        if self.gamma.is_empty() {
            letter
        } else {
            format!("{letter}_{}", self.gamma.iter().join(""))
        }
    }

    /// Inverse of [`SubfileLabel::short_name`] for the letter form.
    pub fn parse_short(s: &str) -> Option<SubfileLabel> {
        let (head, tail) = match s.split_once('_') {
            Some((h, t)) => (h, t),
            None => (s, ""),
        };
        let mut chars = head.chars();
        let c = chars.next()?;
        if chars.next().is_some() || !c.is_ascii_uppercase() {
            return None;
        }
        let file = (c as u8 - b'A' + 1) as usize;
        let mut gamma = WorkerSet::EMPTY;
        for ch in tail.chars() {
            let w = ch.to_digit(10)? as usize;
            if w == 0 || gamma.contains(w) {
                return None;
            }
            gamma = gamma.with(w);
        }
        Some(SubfileLabel { file, gamma })
    }
}

impl fmt::Display for SubfileLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}_{}", self.file, self.gamma)
    }
}

impl fmt::Debug for SubfileLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Which files each worker processes now (`u`) and in the next iteration (`d`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    n_workers: usize,
    n_files: usize,
    u: Vec<Vec<FileId>>,
    d: Vec<Vec<FileId>>,
    owner_now: Vec<WorkerId>,
    owner_next: Vec<WorkerId>,
}

fn owners_of(sets: &[Vec<FileId>], n_files: usize, which: &str) -> Result<Vec<WorkerId>> {
    let mut owner = vec![0; n_files];
    for (i, files) in sets.iter().enumerate() {
        for &f in files {
            if f == 0 || f > n_files {
                return Err(ShuffleError::InvalidAssignment(format!(
                    "{which}({}) contains file {f} outside 1..={n_files}",
                    i + 1
                )));
            }
            if owner[f - 1] != 0 {
                return Err(ShuffleError::InvalidAssignment(format!(
                    "file {f} appears in both {which}({}) and {which}({})",
                    owner[f - 1],
                    i + 1
                )));
            }
            owner[f - 1] = i + 1;
        }
    }
    Ok(owner)
}

impl Assignment {
    pub fn new(u: Vec<Vec<FileId>>, d: Vec<Vec<FileId>>) -> Result<Self> {
        let k = u.len();
        if k == 0 || d.len() != k {
            return Err(ShuffleError::InvalidAssignment(format!(
                "u has {} workers and d has {}",
                k,
                d.len()
            )));
        }
        if k > MAX_WORKERS {
            return Err(ShuffleError::InvalidAssignment(format!("K={k} exceeds {MAX_WORKERS}")));
        }
        let q = u[0].len();
        if q == 0 {
            return Err(ShuffleError::InvalidAssignment("empty file sets".into()));
        }
        for (i, (a, b)) in u.iter().zip(&d).enumerate() {
            if a.len() != q || b.len() != q {
                return Err(ShuffleError::InvalidAssignment(format!(
                    "worker {} has |u|={} and |d|={}, expected {q}",
                    i + 1,
                    a.len(),
                    b.len()
                )));
            }
        }
        let n = k * q;
        let owner_now = owners_of(&u, n, "u")?;
        let owner_next = owners_of(&d, n, "d")?;
        let sorted = |v: Vec<Vec<FileId>>| {
            v.into_iter()
                .map(|mut s| {
                    s.sort_unstable();
                    s
                })
                .collect::<Vec<_>>()
        };
        Ok(Assignment {
            n_workers: k,
            n_files: n,
            u: sorted(u),
            d: sorted(d),
            owner_now,
            owner_next,
        })
    }

    /// Canonical `u` with the given next-iteration sets.
    pub fn with_canonical_u(d: Vec<Vec<FileId>>) -> Result<Self> {
        let k = d.len();
        let q = d.first().map_or(0, Vec::len);
        Self::new(canonical_u(k, k * q), d)
    }

    /// `N = K`, `u(i) = {i}`, `d(i) = {next[i-1]}`.
    pub fn from_permutation(next: &[FileId]) -> Result<Self> {
        Self::with_canonical_u(next.iter().map(|&f| vec![f]).collect())
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    pub fn n_files(&self) -> usize {
        self.n_files
    }

    pub fn files_per_worker(&self) -> usize {
        self.n_files / self.n_workers
    }

    pub fn u(&self, w: WorkerId) -> &[FileId] {
        &self.u[w - 1]
    }

    pub fn d(&self, w: WorkerId) -> &[FileId] {
        &self.d[w - 1]
    }

    pub fn u_sets(&self) -> &[Vec<FileId>] {
        &self.u
    }

    pub fn d_sets(&self) -> &[Vec<FileId>] {
        &self.d
    }

    pub fn owner_now(&self, f: FileId) -> WorkerId {
        self.owner_now[f - 1]
    }

    pub fn owner_next(&self, f: FileId) -> WorkerId {
        self.owner_next[f - 1]
    }

    pub fn is_canonical(&self) -> bool {
        let q = self.files_per_worker();
        (1..=self.n_files).all(|f| self.owner_now(f) == (f - 1) / q + 1)
    }

    pub fn check_params(&self, params: &SystemParams) -> Result<()> {
        if params.n_workers != self.n_workers || params.n_files != self.n_files {
            return Err(ShuffleError::InvalidAssignment(format!(
                "assignment has K={} N={}, parameters have K={} N={}",
                self.n_workers, self.n_files, params.n_workers, params.n_files
            )));
        }
        Ok(())
    }
}

/// `u(i) = {(i-1)N/K + 1, ..., iN/K}`.
pub fn canonical_u(n_workers: usize, n_files: usize) -> Vec<Vec<FileId>> {
    let q = n_files / n_workers;
    (0..n_workers)
        .map(|i| (i * q + 1..=(i + 1) * q).collect())
        .collect()
}

/// Bijection on file ids produced by [`canonicalize_assignment`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRelabeling {
    /// `forward[f-1]` is the new id of original file `f`.
    pub forward: Vec<FileId>,
}

impl FileRelabeling {
    pub fn identity(n: usize) -> Self {
        FileRelabeling {
            forward: (1..=n).collect(),
        }
    }

    pub fn apply(&self, f: FileId) -> FileId {
        self.forward[f - 1]
    }

    pub fn inverse(&self) -> FileRelabeling {
        let mut back = vec![0; self.forward.len()];
        for (i, &g) in self.forward.iter().enumerate() {
            back[g - 1] = i + 1;
        }
        FileRelabeling { forward: back }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &g)| g == i + 1)
    }

    pub fn relabel(&self, a: &Assignment) -> Assignment {
        let map = |sets: &[Vec<FileId>]| {
            sets.iter()
                .map(|s| s.iter().map(|&f| self.apply(f)).collect())
                .collect()
        };
        Assignment::new(map(a.u_sets()), map(a.d_sets())).expect("bijection preserves validity")
    }
}

/// Renames files so that `u` becomes canonical; the `ℓ`-th smallest file of `u(i)`
/// becomes `(i-1)N/K + ℓ`.
pub fn canonicalize_assignment(a: &Assignment) -> (Assignment, FileRelabeling) {
    let q = a.files_per_worker();
    let mut forward = vec![0; a.n_files()];
    for (i, files) in a.u_sets().iter().enumerate() {
        for (l, &f) in files.iter().enumerate() {
            forward[f - 1] = i * q + l + 1;
        }
    }
    let map = FileRelabeling { forward };
    (map.relabel(a), map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransitionEdge {
    pub from: WorkerId,
    pub to: WorkerId,
    pub file: FileId,
}

/// Directed multigraph with one edge per file, from its current to its next processor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileTransitionGraph {
    n_workers: usize,
    edges: Vec<TransitionEdge>,
    cycles: Option<Vec<Vec<WorkerId>>>,
}

impl FileTransitionGraph {
    pub fn from_assignment(a: &Assignment) -> FileTransitionGraph {
        let edges = (1..=a.n_files())
            .map(|f| TransitionEdge {
                from: a.owner_now(f),
                to: a.owner_next(f),
                file: f,
            })
            .collect();
        Self::from_edges(a.n_workers(), edges).expect("assignment graphs are regular")
    }

    /// Validates regularity. Cycles are computed when every vertex has degree one.
    pub fn from_edges(n_workers: usize, mut edges: Vec<TransitionEdge>) -> Result<Self> {
        if n_workers == 0 || edges.is_empty() || !edges.len().is_multiple_of(n_workers) {
            return Err(ShuffleError::NotRegular(format!(
                "{} edges on {} vertices",
                edges.len(),
                n_workers
            )));
        }
        let r = edges.len() / n_workers;
        let mut out_deg = vec![0; n_workers];
        let mut in_deg = vec![0; n_workers];
        for e in &edges {
            if !(1..=n_workers).contains(&e.from) || !(1..=n_workers).contains(&e.to) {
                return Err(ShuffleError::NotRegular(format!("edge {e:?} leaves the vertex set")));
            }
            out_deg[e.from - 1] += 1;
            in_deg[e.to - 1] += 1;
        }
        for w in 0..n_workers {
            if out_deg[w] != r || in_deg[w] != r {
                return Err(ShuffleError::NotRegular(format!(
                    "worker {} has out-degree {} and in-degree {}, expected {r}",
                    w + 1,
                    out_deg[w],
                    in_deg[w]
                )));
            }
        }
        edges.sort_by_key(|e| (e.file, e.from, e.to));
        let cycles = (r == 1).then(|| {
            let mut succ = vec![0; n_workers + 1];
            for e in &edges {
                succ[e.from] = e.to;
            }
            let mut seen = vec![false; n_workers + 1];
            let mut cycles = Vec::new();
            for start in 1..=n_workers {
                if seen[start] {
                    continue;
                }
                let mut cyc = Vec::new();
                let mut v = start;
                while !seen[v] {
                    seen[v] = true;
                    cyc.push(v);
                    v = succ[v];
                }
                cycles.push(cyc);
            }
            cycles
        });
        Ok(FileTransitionGraph {
            n_workers,
            edges,
            cycles,
        })
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    pub fn edges(&self) -> &[TransitionEdge] {
        &self.edges
    }

    pub fn degree(&self) -> usize {
        self.edges.len() / self.n_workers
    }

    pub fn cycles(&self) -> Option<&[Vec<WorkerId>]> {
        self.cycles.as_deref()
    }

    pub fn gamma(&self) -> Option<usize> {
        self.cycles.as_ref().map(Vec::len)
    }

    pub fn cycle_lengths(&self) -> Option<Vec<usize>> {
        self.cycles
            .as_ref()
            .map(|c| c.iter().map(Vec::len).collect())
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut v = vec![0; self.n_workers];
        for e in &self.edges {
            v[e.from - 1] += 1;
        }
        v
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut v = vec![0; self.n_workers];
        for e in &self.edges {
            v[e.to - 1] += 1;
        }
        v
    }

    /// Edge multiplicities `(from, to) -> count`.
    pub fn multiplicities(&self) -> BTreeMap<(WorkerId, WorkerId), usize> {
        let mut m = BTreeMap::new();
        for e in &self.edges {
            *m.entry((e.from, e.to)).or_insert(0) += 1;
        }
        m
    }
}

pub fn build_file_transition_graph(
    assignment: &Assignment,
    params: &SystemParams,
) -> Result<FileTransitionGraph> {
    params.validate()?;
    assignment.check_params(params)?;
    Ok(FileTransitionGraph::from_assignment(assignment))
}

/// JSON form of a scenario: `{"K","N","S","u","d"}` with 1-based ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub u: Vec<Vec<FileId>>,
    pub d: Vec<Vec<FileId>>,
}

impl AssignmentFile {
    pub fn new(params: &SystemParams, a: &Assignment) -> Self {
        AssignmentFile {
            k: params.n_workers,
            n: params.n_files,
            s: params.cache_size,
            u: a.u_sets().to_vec(),
            d: a.d_sets().to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(SystemParams, Assignment)> {
        let params = SystemParams::new(self.n, self.k, self.s)?;
        let a = Assignment::new(self.u, self.d)?;
        a.check_params(&params)?;
        Ok((params, a))
    }

    pub fn from_json(s: &str) -> Result<(SystemParams, Assignment)> {
        let f: AssignmentFile = serde_json::from_str(s)?;
        f.into_parts()
    }
}
