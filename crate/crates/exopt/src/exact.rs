//! Ground-truth oracles: exhaustive balanced-bipartition search and
//! Held-Karp dynamic programming for small TSP instances.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tsp::TspInstance;

/// Largest vertex count accepted by [`exact_partition`]; C(24, 12)/2 ≈
/// 1.35M candidate bipartitions.
pub const MAX_EXACT_PARTITION: usize = 24;

/// Largest city count accepted by [`exact_tsp`]; the Held-Karp table holds
/// 2^(n−1)·(n−1) entries.
pub const MAX_EXACT_TSP: usize = 18;

/// Optimum plus a witness configuration that attains it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult<C> {
    pub optimum: f64,
    pub witness: C,
    pub nodes_explored: u64,
}

/// Minimum cutsize over every balanced bipartition, by enumeration.
/// Vertex 0 is fixed to side 0, which halves the search space without
/// losing any partition up to side relabeling.
pub fn exact_partition(graph: &Graph) -> Result<ExactResult<Vec<u8>>> {
    let n = graph.vertex_count();
    if n == 0 || n % 2 != 0 {
        return Err(Error::invalid_arg(format!(
            "bipartitioning needs a positive even vertex count, got {n}"
        )));
    }
    if n > MAX_EXACT_PARTITION {
        return Err(Error::Capacity(format!(
            "exact partitioning handles n <= {MAX_EXACT_PARTITION}, got {n}"
        )));
    }

    // Edges as index pairs once, for a fast cut count per candidate.
    let mut edges = Vec::with_capacity(graph.edge_count());
    for v in 0..n {
        for &w in graph.neighbors(v) {
            if (w as usize) > v {
                edges.push((v as u32, w));
            }
        }
    }

    let half = n / 2;
    // Choose half-1 of the vertices 1..n to join vertex 0 on side 0,
    // in lexicographic order.
    let mut choose: Vec<usize> = (1..half).collect();
    let mut side = vec![1u8; n];
    let mut best = u64::MAX;
    let mut best_side = Vec::new();
    let mut explored = 0u64;

    loop {
        side.iter_mut().for_each(|s| *s = 1);
        side[0] = 0;
        for &v in &choose {
            side[v] = 0;
        }
        let cut = edges
            .iter()
            .filter(|&&(a, b)| side[a as usize] != side[b as usize])
            .count() as u64;
        explored += 1;
        if cut < best {
            best = cut;
            best_side = side.clone();
        }

        if !next_combination(&mut choose, n) {
            break;
        }
    }

    Ok(ExactResult {
        optimum: best as f64,
        witness: best_side,
        nodes_explored: explored,
    })
}

/// Advances an ascending combination drawn from {1, ..., n−1} to its
/// lexicographic successor; false once exhausted.
fn next_combination(choose: &mut [usize], n: usize) -> bool {
    let k = choose.len();
    for i in (0..k).rev() {
        if choose[i] < n - (k - i) {
            choose[i] += 1;
            for j in (i + 1)..k {
                choose[j] = choose[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Optimal tour by Held-Karp dynamic programming over subsets, with city 0
/// fixed as the anchor. Returns the optimal length and one optimal tour.
pub fn exact_tsp(instance: &TspInstance) -> Result<ExactResult<Vec<u32>>> {
    let n = instance.n();
    if n > MAX_EXACT_TSP {
        return Err(Error::Capacity(format!(
            "exact TSP handles n <= {MAX_EXACT_TSP}, got {n}"
        )));
    }

    let m = n - 1; // cities 1..n encoded as bits 0..m
    let full: usize = (1 << m) - 1;
    let mut cost = vec![f64::INFINITY; (full + 1) * m];
    let mut parent = vec![u8::MAX; (full + 1) * m];
    let mut explored = 0u64;

    for v in 0..m {
        cost[(1 << v) * m + v] = instance.distance(0, v + 1);
    }

    for mask in 1..=full {
        for last in 0..m {
            if mask & (1 << last) == 0 {
                continue;
            }
            let c = cost[mask * m + last];
            if !c.is_finite() {
                continue;
            }
            explored += 1;
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nmask = mask | (1 << next);
                let nc = c + instance.distance(last + 1, next + 1);
                if nc < cost[nmask * m + next] {
                    cost[nmask * m + next] = nc;
                    parent[nmask * m + next] = last as u8;
                }
            }
        }
    }

    let (best_last, best_len) = (0..m)
        .map(|last| (last, cost[full * m + last] + instance.distance(last + 1, 0)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n >= 3");

    // Reconstruct 0 -> ... -> best_last -> 0.
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    let mut last = best_last;
    while last != u8::MAX as usize {
        order.push((last + 1) as u32);
        let prev = parent[mask * m + last];
        mask &= !(1 << last);
        if prev == u8::MAX {
            break;
        }
        last = prev as usize;
    }
    order.push(0);
    order.reverse();

    Ok(ExactResult {
        optimum: best_len,
        witness: order,
        nodes_explored: explored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_geometric, GeometricSpec};
    use crate::partition::{cutsize, Partition};
    use crate::tsp::{tour_length, Tour};

    #[test]
    fn two_disjoint_triangles_have_zero_cut() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let r = exact_partition(&g).unwrap();
        assert_eq!(r.optimum, 0.0);
        assert_eq!(r.nodes_explored, 10); // C(5, 2)
        let witness = Partition::new(r.witness).unwrap();
        assert_eq!(cutsize(&g, &witness), 0);
    }

    #[test]
    fn k4_optimum_is_four() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(exact_partition(&g).unwrap().optimum, 4.0);
    }

    #[test]
    fn cycle_c6_optimum_is_two() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        assert_eq!(exact_partition(&g).unwrap().optimum, 2.0);
    }

    #[test]
    fn partition_witness_attains_optimum() {
        for seed in 0..5 {
            let g = generate_geometric(&GeometricSpec::new(12, 4.0, seed)).unwrap();
            let r = exact_partition(&g).unwrap();
            let witness = Partition::new(r.witness).unwrap();
            assert_eq!(cutsize(&g, &witness) as f64, r.optimum);
        }
    }

    #[test]
    fn partition_capacity_and_argument_errors() {
        let g = generate_geometric(&GeometricSpec::new(26, 4.0, 0)).unwrap();
        assert!(matches!(exact_partition(&g), Err(Error::Capacity(_))));
        let odd = Graph::from_edges(5, &[(0, 1)]).unwrap();
        assert!(matches!(
            exact_partition(&odd),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn exact_partition_beats_every_balanced_split_sampled() {
        let g = generate_geometric(&GeometricSpec::new(10, 5.0, 3)).unwrap();
        let opt = exact_partition(&g).unwrap().optimum;
        let mut side = vec![0u8; 10];
        // A few arbitrary balanced splits can only be worse or equal.
        for pattern in [0b0000011111u32, 0b1010101010, 0b1100110010, 0b0110100110] {
            for v in 0..10 {
                side[v] = ((pattern >> v) & 1) as u8;
            }
            if side.iter().filter(|&&s| s == 1).count() == 5 {
                let p = Partition::new(side.clone()).unwrap();
                assert!(cutsize(&g, &p) as f64 >= opt);
            }
        }
    }

    #[test]
    fn tsp_three_cities_is_the_single_tour() {
        let inst = TspInstance::random_matrix(3, 4).unwrap();
        let r = exact_tsp(&inst).unwrap();
        let expected =
            inst.distance(0, 1) + inst.distance(1, 2) + inst.distance(2, 0);
        assert!((r.optimum - expected).abs() < 1e-12);
        let tour = Tour::new(r.witness).unwrap();
        assert!((tour_length(&inst, &tour) - r.optimum).abs() < 1e-12);
    }

    /// Every distinct tour by permutation scan; the independent oracle for
    /// Held-Karp.
    fn brute_force_optimum(instance: &TspInstance) -> f64 {
        let n = instance.n();
        let mut rest: Vec<u32> = (1..n as u32).collect();
        let mut best = f64::INFINITY;
        permute(&mut rest, 0, &mut |perm: &[u32]| {
            let mut len = instance.distance(0, perm[0] as usize);
            for w in perm.windows(2) {
                len += instance.distance(w[0] as usize, w[1] as usize);
            }
            len += instance.distance(perm[n - 2] as usize, 0);
            if len < best {
                best = len;
            }
        });
        best
    }

    fn permute(items: &mut Vec<u32>, k: usize, visit: &mut impl FnMut(&[u32])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    #[test]
    fn held_karp_matches_brute_force_on_four_cities() {
        for seed in 0..10 {
            let inst = TspInstance::random_matrix(4, seed).unwrap();
            let r = exact_tsp(&inst).unwrap();
            assert!((r.optimum - brute_force_optimum(&inst)).abs() < 1e-12);
            let tour = Tour::new(r.witness).unwrap();
            assert!((tour_length(&inst, &tour) - r.optimum).abs() < 1e-12);
        }
    }

    #[test]
    fn held_karp_matches_brute_force_on_ten_cities() {
        let inst = TspInstance::random_matrix(10, 2024).unwrap();
        let r = exact_tsp(&inst).unwrap();
        assert!((r.optimum - brute_force_optimum(&inst)).abs() < 1e-12);
    }

    #[test]
    fn tsp_capacity_error() {
        let inst = TspInstance::random_matrix(19, 0).unwrap();
        assert!(matches!(exact_tsp(&inst), Err(Error::Capacity(_))));
    }
}
