#![allow(dead_code)]

use proptest::prelude::*;
use shuffle_core::{Assignment, SystemParams};

/// `C(n, k)` from a Pascal row, independent of the library's binomial.
pub fn choose(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut row = vec![1u64; 1];
    for i in 1..=n {
        let mut next = vec![1u64; i + 1];
        for j in 1..i {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    row[k]
}

/// Cycle lengths of `next` by walking from each unvisited worker.
pub fn naive_cycle_lengths(next: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; next.len()];
    let mut out = Vec::new();
    for start in 0..next.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut w = start;
        while !seen[w] {
            seen[w] = true;
            w = next[w] - 1;
            len += 1;
        }
        out.push(len);
    }
    out.sort_unstable();
    out
}

/// `(K, q, S)` with `K ≤ max_k`, `q` files per worker and `1 ≤ Ŝ ≤ K`.
pub fn params(max_k: usize, max_q: usize) -> impl Strategy<Value = SystemParams> {
    (2..=max_k, 1..=max_q)
        .prop_flat_map(|(k, q)| (Just(k), Just(q), 1..=k))
        .prop_map(|(k, q, shat)| SystemParams::new(k * q, k, shat * q).unwrap())
}

/// Parameters with a uniformly shuffled canonical-`u` assignment.
pub fn shuffled(max_k: usize, max_q: usize) -> impl Strategy<Value = (SystemParams, Assignment)> {
    params(max_k, max_q).prop_flat_map(|p| {
        let files: Vec<usize> = (1..=p.n_files).collect();
        (Just(p), Just(files).prop_shuffle()).prop_map(|(p, files)| {
            let d = files.chunks(p.files_per_worker()).map(<[usize]>::to_vec).collect();
            (p, Assignment::with_canonical_u(d).unwrap())
        })
    })
}

/// `(Ŝ, next)` for a permutation of `[K]`.
pub fn permutation(max_k: usize) -> impl Strategy<Value = (usize, Vec<usize>)> {
    (2..=max_k).prop_flat_map(|k| (1..=k, Just((1..=k).collect::<Vec<_>>()).prop_shuffle()))
}
