mod common;

use common::{choose, naive_cycle_lengths, permutation, shuffled};
use proptest::prelude::*;
use shuffle_core::model::{canonicalize_assignment, AssignmentFile};
use shuffle_core::placement::partition_files;
use shuffle_core::{FileTransitionGraph, WorkerSet};

proptest! {
    #[test]
    fn canonicalization_preserves_the_transition_graph((p, a) in shuffled(7, 3), seed in any::<u64>()) {
        // Scramble the current holdings so canonicalization has work to do.
        let mut files: Vec<usize> = (1..=p.n_files).collect();
        let mut state = seed | 1;
        for i in (1..files.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            files.swap(i, (state >> 33) as usize % (i + 1));
        }
        let q = p.files_per_worker();
        let rename = |f: usize| files[f - 1];
        let u = a.u_sets().iter().map(|s| s.iter().map(|&f| rename(f)).collect()).collect();
        let d = a.d_sets().iter().map(|s| s.iter().map(|&f| rename(f)).collect()).collect();
        let scrambled = shuffle_core::Assignment::new(u, d).unwrap();

        let (canon, relabel) = canonicalize_assignment(&scrambled);
        prop_assert!(canon.is_canonical());
        for f in 1..=p.n_files {
            prop_assert_eq!(relabel.inverse().apply(relabel.apply(f)), f);
        }
        let before = FileTransitionGraph::from_assignment(&scrambled).multiplicities();
        let after = FileTransitionGraph::from_assignment(&canon).multiplicities();
        prop_assert_eq!(before, after);
        prop_assert_eq!(canon.files_per_worker(), q);
    }

    #[test]
    fn transition_graph_is_regular((p, a) in shuffled(8, 4)) {
        let g = FileTransitionGraph::from_assignment(&a);
        let q = p.files_per_worker();
        prop_assert_eq!(g.edges().len(), p.n_files);
        prop_assert_eq!(g.degree(), q);
        prop_assert!(g.out_degrees().iter().all(|&d| d == q));
        prop_assert!(g.in_degrees().iter().all(|&d| d == q));
    }

    #[test]
    fn cycle_type_matches_a_naive_walk((_, next) in permutation(10)) {
        let a = shuffle_core::Assignment::from_permutation(&next).unwrap();
        let g = FileTransitionGraph::from_assignment(&a);
        let mut lens = g.cycle_lengths().unwrap();
        lens.sort_unstable();
        let want = naive_cycle_lengths(&next);
        prop_assert_eq!(g.gamma().unwrap(), want.len());
        prop_assert_eq!(lens, want);
        let cycles = g.cycles().unwrap();
        let mins: Vec<usize> = cycles.iter().map(|c| *c.iter().min().unwrap()).collect();
        prop_assert!(mins.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(cycles.iter().all(|c| c[0] == *c.iter().min().unwrap()));
    }

    #[test]
    fn dense_index_round_trips((p, a) in shuffled(7, 2)) {
        let universe = partition_files(&p, &a);
        let per = choose(p.n_workers - 1, p.shat() - 1) as usize;
        prop_assert_eq!(universe.len(), p.n_files * per);
        for i in 0..universe.len() {
            let l = universe.label_at(i).unwrap();
            prop_assert_eq!(universe.index_of(&l), Some(i));
            prop_assert!(!l.gamma.contains(universe.owner(l.file)));
            prop_assert_eq!(l.gamma.len(), p.shat() - 1);
        }
        prop_assert!(universe.label_at(universe.len()).is_none());
    }

    #[test]
    fn worker_sets_order_lexicographically(a in 0u64..(1 << 12), b in 0u64..(1 << 12)) {
        let (x, y) = (WorkerSet::from_bits(a), WorkerSet::from_bits(b));
        prop_assert_eq!(x.cmp(&y), x.to_vec().cmp(&y.to_vec()));
        prop_assert_eq!(x.union(y).len() + x.intersection(y).len(), x.len() + y.len());
    }

    #[test]
    fn assignment_files_round_trip_through_json((p, a) in shuffled(6, 3)) {
        let text = serde_json::to_string(&AssignmentFile::new(&p, &a)).unwrap();
        let (p2, a2) = AssignmentFile::from_json(&text).unwrap();
        prop_assert_eq!(p2, p);
        prop_assert_eq!(a2, a);
    }
}
