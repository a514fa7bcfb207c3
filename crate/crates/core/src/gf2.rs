//! Linear algebra over GF(2) with dense bitset rows, and the decodability oracle.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::delivery::SubMessage;
use crate::model::SubfileLabel;
use crate::placement::CacheState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(width: usize) -> Self {
        BitRow {
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn unit(width: usize, i: usize) -> Self {
        let mut r = Self::zeros(width);
        r.flip(i);
        r
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn highest(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * 64 + 63 - w.leading_zeros() as usize)
    }
}

/// Row-space basis keyed by leading bit.
#[derive(Debug, Clone)]
pub struct Gf2Basis {
    width: usize,
    by_pivot: BTreeMap<usize, BitRow>,
}

impl Gf2Basis {
    pub fn new(width: usize) -> Self {
        Gf2Basis {
            width,
            by_pivot: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.by_pivot.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn reduce(&self, mut v: BitRow) -> BitRow {
        while let Some(p) = v.highest() {
            match self.by_pivot.get(&p) {
                Some(r) => v.xor_assign(r),
                None => break,
            }
        }
        v
    }

    /// Returns whether the row was independent.
    pub fn insert(&mut self, v: BitRow) -> bool {
        let v = self.reduce(v);
        match v.highest() {
            Some(p) => {
                self.by_pivot.insert(p, v);
                true
            }
            None => false,
        }
    }

    pub fn spans(&self, v: BitRow) -> bool {
        self.reduce(v).is_zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub decodable: bool,
    /// Rank of the messages projected away from cached coordinates.
    pub rank: usize,
    /// Uncached coordinates touched by messages or demand.
    pub unknowns: usize,
    pub unresolved: Vec<SubfileLabel>,
}

/// Whether every demanded unit vector lies in the span of cached unit vectors and message supports.
pub fn gf2_decodability_oracle(
    cache: &CacheState,
    messages: &[SubMessage],
    demand: &BTreeSet<SubfileLabel>,
) -> OracleReport {
    let mut cols: BTreeMap<SubfileLabel, usize> = BTreeMap::new();
    for l in messages.iter().flat_map(|m| m.support.iter()).chain(demand.iter()) {
        if !cache.contains(l) {
            let next = cols.len();
            cols.entry(*l).or_insert(next);
        }
    }
    let width = cols.len();
    let mut basis = Gf2Basis::new(width);
    for m in messages {
        let mut row = BitRow::zeros(width);
        for l in &m.support {
            if let Some(&c) = cols.get(l) {
                row.flip(c);
            }
        }
        basis.insert(row);
    }
    let unresolved: Vec<SubfileLabel> = demand
        .iter()
        .filter(|l| !cache.contains(l) && !basis.spans(BitRow::unit(width, cols[l])))
        .copied()
        .collect();
    OracleReport {
        decodable: unresolved.is_empty(),
        rank: basis.rank(),
        unknowns: width,
        unresolved,
    }
}
