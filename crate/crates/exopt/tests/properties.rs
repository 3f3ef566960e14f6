//! Property suites over the solver invariants: selector exactness, heap
//! order, incremental-vs-recomputed state, tour validity, and file format
//! round trips.

use exopt::bench::{parse_records_csv, quantize_sig6, records_to_csv, ResultRecord};
use exopt::graph::{generate_geometric, parse_graph, graph_to_string, GeometricSpec};
use exopt::partition::{greedy_init, PartitionEo, PartitionState};
use exopt::rank::{FitnessHeap, RankSelector, SelectionMode, SolverRng};
use exopt::tsp::{tour_length, Tour, TspEo, TspInstance};
use exopt::EoProblem;
use proptest::prelude::*;
use rand::Rng as _;
use rand::SeedableRng as _;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selector_mass_is_normalized(size in 1usize..100_000, tau in 0.0f64..10.0) {
        let s = RankSelector::new(size, tau).unwrap();
        prop_assert!((s.tail_probability(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selector_inversion_is_exact(size in 1usize..2000, tau in 0.0f64..10.0, u in 0.0f64..1.0) {
        let s = RankSelector::new(size, tau).unwrap();
        let u = 1.0 - u; // (0, 1]
        let n = s.rank_for_quantile(u);
        prop_assert!(s.cumulative(n) >= u);
        prop_assert!(n == 1 || s.cumulative(n - 1) < u);
    }

    #[test]
    fn heap_property_holds_after_updates(seed in 0u64..1000, n in 2usize..128) {
        let mut rng = SolverRng::seed_from_u64(seed);
        let fitness: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let mut heap = FitnessHeap::new(&fitness, &mut rng);
        for _ in 0..100 {
            let id = rng.gen_range(0..n);
            heap.update(id, rng.gen(), &mut rng);
        }
        prop_assert!(heap.satisfies_heap_property());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_incremental_state_never_drifts(
        seed in 0u64..10_000,
        half_n in 2usize..32,
        alpha in 1.0f64..8.0,
        steps in 1usize..400,
    ) {
        let n = 2 * half_n;
        let g = generate_geometric(&GeometricSpec::new(n, alpha, seed)).unwrap();
        let p = greedy_init(&g, seed ^ 0xabcd).unwrap();
        let mut eo = PartitionEo::new(&g, &p, SelectionMode::ExactRank, seed ^ 0x1234);
        let selector = RankSelector::new(n, 1.4).unwrap();
        let mut rng = SolverRng::seed_from_u64(seed);
        for _ in 0..steps {
            eo.eo_step(&selector, &mut rng).unwrap();
        }
        prop_assert!(eo.state().verify_consistent().is_ok());
        prop_assert_eq!(eo.state().counts(), (half_n, half_n));
    }

    #[test]
    fn tsp_moves_preserve_validity_and_length(
        seed in 0u64..10_000,
        n in 4usize..48,
        euclidean in any::<bool>(),
        steps in 1usize..400,
    ) {
        let inst = if euclidean {
            TspInstance::euclidean_torus(n, seed).unwrap()
        } else {
            TspInstance::random_matrix(n, seed).unwrap()
        };
        let tour = Tour::random(n, seed ^ 0x77).unwrap();
        let mut state = TspEo::new(&inst, tour, 4.0, SelectionMode::HeapApprox, seed).unwrap();
        let selector = RankSelector::new(n, 4.0).unwrap();
        let mut rng = SolverRng::seed_from_u64(seed ^ 0xfeed);
        for _ in 0..steps {
            state.eo_step(&selector, &mut rng).unwrap();
        }
        prop_assert!(state.verify_consistent().is_ok());
    }

    #[test]
    fn tour_length_is_rotation_and_reversal_invariant(
        seed in 0u64..10_000,
        n in 3usize..32,
        shift in 0usize..32,
    ) {
        let inst = TspInstance::random_matrix(n, seed).unwrap();
        let tour = Tour::random(n, seed ^ 0x3).unwrap();
        let len = tour_length(&inst, &tour);

        let mut rotated = tour.order().to_vec();
        rotated.rotate_left(shift % n);
        let rot_len = tour_length(&inst, &Tour::new(rotated).unwrap());
        prop_assert!((rot_len - len).abs() <= 1e-9 * len.max(1.0));

        let mut reversed = tour.order().to_vec();
        reversed.reverse();
        let rev_len = tour_length(&inst, &Tour::new(reversed).unwrap());
        prop_assert!((rev_len - len).abs() <= 1e-9 * len.max(1.0));
    }

    #[test]
    fn graph_files_round_trip(seed in 0u64..10_000, n in 2usize..64, alpha in 0.5f64..9.0) {
        let g = generate_geometric(&GeometricSpec::new(n, alpha, seed)).unwrap();
        let text = graph_to_string(&g);
        let back = parse_graph(&text).unwrap();
        prop_assert_eq!(graph_to_string(&back), text);
        prop_assert_eq!(back.edge_count(), g.edge_count());
        for v in 0..n {
            prop_assert_eq!(back.neighbors(v), g.neighbors(v));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn result_records_round_trip_csv(
        n in 2usize..10_000,
        instance in 0usize..64,
        best in 0.0f64..1e6,
        spread in 0.0f64..10.0,
        alpha in 0.5f64..20.0,
        seeds in any::<(u64, u64)>(),
    ) {
        use exopt::bench::{Method, Problem, RecordStatus};
        let best = quantize_sig6(best);
        let record = ResultRecord {
            problem: Problem::Partition,
            method: Method::Eo,
            n,
            alpha: Some(quantize_sig6(alpha)),
            kind: None,
            instance,
            status: RecordStatus::Ok,
            best: Some(best),
            mean: Some(quantize_sig6(best + spread)),
            wall_time_s: 0.0,
            instance_seed: seeds.0,
            run_seed0: seeds.1,
            params: "tau=1.4;rng=chacha8".to_string(),
        };
        let csv = records_to_csv(std::slice::from_ref(&record));
        let parsed = parse_records_csv(&csv).unwrap();
        prop_assert_eq!(parsed, vec![record]);
    }
}

/// Fixed-seed partition consistency at full scale: 10^4 swaps on a
/// 64-vertex graph, exact equality with a fresh recomputation.
#[test]
fn partition_ten_thousand_swaps_stay_exact() {
    let g = generate_geometric(&GeometricSpec::new(64, 5.0, 99)).unwrap();
    let p = greedy_init(&g, 1).unwrap();
    let mut state = PartitionState::new(&g, &p);
    let mut rng = SolverRng::seed_from_u64(123);
    for _ in 0..10_000 {
        let u = loop {
            let u = rng.gen_range(0..64);
            if state.side_of(u) == 0 {
                break u;
            }
        };
        let v = loop {
            let v = rng.gen_range(0..64);
            if state.side_of(v) == 1 {
                break v;
            }
        };
        state.swap_pair(u, v);
    }
    state.verify_consistent().unwrap();
}

/// Same scale for the TSP state: 10^4 EO moves, length within 1e-9 of
/// recomputation and a valid single cycle throughout.
#[test]
fn tsp_ten_thousand_moves_stay_exact() {
    let inst = TspInstance::random_matrix(64, 7).unwrap();
    let tour = Tour::random(64, 8).unwrap();
    let mut state = TspEo::new(&inst, tour, 4.4, SelectionMode::ExactRank, 5).unwrap();
    let selector = RankSelector::new(64, 4.4).unwrap();
    let mut rng = SolverRng::seed_from_u64(55);
    for _ in 0..10_000 {
        state.eo_step(&selector, &mut rng).unwrap();
    }
    state.verify_consistent().unwrap();
}
