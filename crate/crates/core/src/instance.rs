//! The canonical `N = K` sub-problem: file `w` is processed by worker `w` now.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShuffleError};
use crate::model::{
    Assignment, FileId, FileTransitionGraph, SubfileLabel, SystemParams, TransitionEdge, WorkerId,
    WorkerSet,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalInstance {
    k: usize,
    shat: usize,
    /// `next[i-1]` is the local file worker `i` processes next.
    next: Vec<WorkerId>,
    /// `files[w-1]` is the global file behind local file `w`.
    files: Vec<FileId>,
    cycles: Vec<Vec<WorkerId>>,
}

impl CanonicalInstance {
    /// Builds from `d` given as a permutation of `1..=k`.
    pub fn from_permutation(shat: usize, next: &[WorkerId]) -> Result<Self> {
        let a = Assignment::from_permutation(next)?;
        let g = FileTransitionGraph::from_assignment(&a);
        Self::from_graph(shat, &g)
    }

    pub fn from_assignment(params: &SystemParams, a: &Assignment) -> Result<Self> {
        a.check_params(params)?;
        if params.n_files != params.n_workers || !a.is_canonical() {
            return Err(ShuffleError::InvalidAssignment(
                "a canonical instance needs N = K and u(i) = {i}".into(),
            ));
        }
        Self::from_graph(params.shat(), &FileTransitionGraph::from_assignment(a))
    }

    /// A unit-degree transition graph; the edge leaving worker `w` carries local file `w`.
    pub fn from_graph(shat: usize, g: &FileTransitionGraph) -> Result<Self> {
        let k = g.n_workers();
        if shat == 0 || shat > k {
            return Err(ShuffleError::InvalidParams(format!("Ŝ={shat} outside 1..={k}")));
        }
        let cycles = g
            .cycles()
            .ok_or_else(|| ShuffleError::NotRegular("sub-problem graph must have unit degrees".into()))?
            .to_vec();
        let mut next = vec![0; k];
        let mut files = vec![0; k];
        for &TransitionEdge { from, to, file } in g.edges() {
            next[to - 1] = from;
            files[from - 1] = file;
        }
        Ok(CanonicalInstance {
            k,
            shat,
            next,
            files,
            cycles,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn shat(&self) -> usize {
        self.shat
    }

    pub fn next(&self, w: WorkerId) -> WorkerId {
        self.next[w - 1]
    }

    pub fn cycles(&self) -> &[Vec<WorkerId>] {
        &self.cycles
    }

    pub fn gamma(&self) -> usize {
        self.cycles.len()
    }

    pub fn all_workers(&self) -> WorkerSet {
        WorkerSet::range(self.k)
    }

    /// Non-dummy subfile: the owner (file index) is outside the subscript and it has `Ŝ-1` members.
    pub fn is_real(&self, file: WorkerId, gamma: WorkerSet) -> bool {
        gamma.len() + 1 == self.shat && !gamma.contains(file) && gamma.is_subset(self.all_workers())
    }

    pub fn global_file(&self, local: WorkerId) -> FileId {
        self.files[local - 1]
    }

    pub fn local_file(&self, global: FileId) -> Option<WorkerId> {
        self.files.iter().position(|&f| f == global).map(|i| i + 1)
    }

    pub fn to_global(&self, l: &SubfileLabel) -> SubfileLabel {
        SubfileLabel::new(self.global_file(l.file), l.gamma)
    }

    pub fn to_local(&self, l: &SubfileLabel) -> Option<SubfileLabel> {
        self.local_file(l.file).map(|f| SubfileLabel::new(f, l.gamma))
    }

    /// Local labels of every subfile worker `w` must obtain.
    pub fn demand(&self, w: WorkerId) -> Vec<SubfileLabel> {
        let f = self.next(w);
        if f == w {
            return Vec::new();
        }
        self.all_workers()
            .without(w)
            .without(f)
            .subsets(self.shat - 1)
            .into_iter()
            .map(|g| SubfileLabel::new(f, g))
            .collect()
    }

    /// Whether worker `w`'s symmetric cache holds the local label.
    pub fn cached(&self, w: WorkerId, l: &SubfileLabel) -> bool {
        l.file == w || l.gamma.contains(w)
    }
}
