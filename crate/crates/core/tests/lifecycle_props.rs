mod common;

use std::collections::BTreeMap;

use common::{params, shuffled};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shuffle_core::lifecycle::{RoundOptions, RoundState};
use shuffle_core::model::canonical_u;
use shuffle_core::placement::{partition_files, place_caches};
use shuffle_core::Assignment;

fn random_assignment(p: &shuffle_core::SystemParams, rng: &mut ChaCha8Rng) -> Assignment {
    let mut files: Vec<usize> = (1..=p.n_files).collect();
    files.shuffle(rng);
    Assignment::with_canonical_u(files.chunks(p.files_per_worker()).map(<[usize]>::to_vec).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn a_round_returns_to_the_canonical_placement((p, a) in shuffled(6, 3)) {
        let options = RoundOptions::default();
        let mut state = RoundState::new(&p, &options);
        let record = state.step(&p, &a, &options).unwrap();
        prop_assert!(record.verified);
        let canonical = Assignment::with_canonical_u(canonical_u(p.n_workers, p.n_files)).unwrap();
        prop_assert_eq!(&state.caches, &place_caches(&p, &canonical));
    }

    #[test]
    fn payloads_follow_their_files_across_rounds(p in params(5, 2), seed in any::<u64>(), rounds in 1usize..5) {
        let options = RoundOptions { payload_bytes: 4, seed, ..RoundOptions::default() };
        let mut state = RoundState::new(&p, &options);
        let first = state.payloads.clone().unwrap().master;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..rounds {
            let a = random_assignment(&p, &mut rng);
            state.step(&p, &a, &options).unwrap();
        }
        // The file now named `f` started life as `origin[f-1]`: its subfiles carry the same bytes
        // once subscripts are mapped back through the recorded relabelings.
        let mut sorted = state.origin.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (1..=p.n_files).collect::<Vec<_>>());
        let payloads = state.payloads.as_ref().unwrap();
        let mut per_file_now: BTreeMap<usize, Vec<Vec<u8>>> = BTreeMap::new();
        for (l, b) in &payloads.master.bytes {
            per_file_now.entry(state.origin[l.file - 1]).or_default().push(b.clone());
        }
        let mut per_file_then: BTreeMap<usize, Vec<Vec<u8>>> = BTreeMap::new();
        for (l, b) in &first.bytes {
            per_file_then.entry(l.file).or_default().push(b.clone());
        }
        for v in per_file_now.values_mut().chain(per_file_then.values_mut()) {
            v.sort();
        }
        prop_assert_eq!(per_file_now, per_file_then);
        for (c, held) in state.caches.iter().zip(&payloads.workers) {
            prop_assert_eq!(held, &payloads.master.restrict(c));
        }
    }

    #[test]
    fn every_subfile_keeps_s_hat_copies(p in params(6, 2), seed in any::<u64>()) {
        let options = RoundOptions::default();
        let mut state = RoundState::new(&p, &options);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let canonical = Assignment::with_canonical_u(canonical_u(p.n_workers, p.n_files)).unwrap();
        let universe = partition_files(&p, &canonical);
        for _ in 0..3 {
            let a = random_assignment(&p, &mut rng);
            state.step(&p, &a, &options).unwrap();
            let mut copies: BTreeMap<_, usize> = BTreeMap::new();
            for l in state.caches.iter().flat_map(|c| c.labels()) {
                *copies.entry(*l).or_default() += 1;
            }
            prop_assert_eq!(copies.len(), universe.len());
            prop_assert!(copies.values().all(|&n| n == p.shat()));
        }
    }
}
