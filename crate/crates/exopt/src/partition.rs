//! EO for balanced graph bipartitioning: greedy initialization, per-vertex
//! fitness λ = g/(g+b), the rank-selected pair-swap move, and the solve
//! loop.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rank::{
    run_eo, EoConfig, EoProblem, FitnessHeap, RankSelector, RunResult, SelectionMode, SolverRng,
};
use rand::Rng;
use rand::SeedableRng;
use std::collections::VecDeque;

/// Rejection draws attempted before falling back to the worst-ranked
/// admissible element. Only reachable when τ is so large that the
/// admissible elements carry vanishing selection mass.
pub(crate) const REDRAW_LIMIT: usize = 4096;

/// Balanced two-way vertex assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    side: Vec<u8>,
    counts: [usize; 2],
}

impl Partition {
    /// Wraps a side-label vector; labels must be 0/1 and exactly half each.
    pub fn new(side: Vec<u8>) -> Result<Self> {
        let n = side.len();
        if n == 0 || n % 2 != 0 {
            return Err(Error::invalid_arg("partition needs a positive even n"));
        }
        let ones = side.iter().filter(|&&s| s == 1).count();
        if side.iter().any(|&s| s > 1) {
            return Err(Error::invalid_arg("side labels must be 0 or 1"));
        }
        if ones * 2 != n {
            return Err(Error::invalid_arg(format!(
                "unbalanced partition: {} vs {}",
                n - ones,
                ones
            )));
        }
        Ok(Partition {
            counts: [n - ones, ones],
            side,
        })
    }

    pub fn side_of(&self, v: usize) -> u8 {
        self.side[v]
    }

    pub fn sides(&self) -> &[u8] {
        &self.side
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.counts[0], self.counts[1])
    }
}

/// Greedy start: BFS growth from a random seed vertex, clustering connected
/// vertices into side 0 until it holds n/2; the rest go to side 1. When a
/// component is exhausted the search restarts from a fresh random unvisited
/// vertex. Deterministic per seed.
pub fn greedy_init(graph: &Graph, seed: u64) -> Result<Partition> {
    let n = graph.vertex_count();
    if n == 0 || n % 2 != 0 {
        return Err(Error::invalid_arg(format!(
            "bipartitioning needs a positive even vertex count, got {n}"
        )));
    }
    let mut rng = SolverRng::seed_from_u64(seed);
    let half = n / 2;
    let mut side = vec![1u8; n];
    let mut visited = vec![false; n];
    let mut assigned = 0usize;
    let mut queue = VecDeque::new();

    'grow: while assigned < half {
        // Visited vertices are all assigned, so at least half the graph is
        // still unvisited and rejection sampling terminates quickly.
        let start = loop {
            let v = rng.gen_range(0..n);
            if !visited[v] {
                break v;
            }
        };
        visited[start] = true;
        queue.clear();
        queue.push_back(start as u32);
        while let Some(u) = queue.pop_front() {
            side[u as usize] = 0;
            assigned += 1;
            if assigned == half {
                continue 'grow;
            }
            for &w in graph.neighbors(u as usize) {
                if !visited[w as usize] {
                    visited[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    Partition::new(side)
}

/// Number of edges crossing the partition, by direct edge scan.
pub fn cutsize(graph: &Graph, partition: &Partition) -> u64 {
    let mut cut = 0u64;
    for v in 0..graph.vertex_count() {
        for &w in graph.neighbors(v) {
            if (w as usize) > v && partition.side_of(v) != partition.side_of(w as usize) {
                cut += 1;
            }
        }
    }
    cut
}

/// Incrementally maintained bipartition state: side labels, per-vertex good
/// (same-side) and bad (cross-side) edge counts, side sizes and the
/// cutsize m = Σ b_i / 2.
#[derive(Clone, Debug)]
pub struct PartitionState<'g> {
    graph: &'g Graph,
    side: Vec<u8>,
    good: Vec<u32>,
    bad: Vec<u32>,
    counts: [usize; 2],
    cut: u64,
}

impl<'g> PartitionState<'g> {
    pub fn new(graph: &'g Graph, partition: &Partition) -> Self {
        Self::from_sides(graph, partition.sides().to_vec())
    }

    /// Builds from raw side labels without a balance requirement; the SA
    /// solver walks through unbalanced intermediate states.
    pub fn from_sides(graph: &'g Graph, side: Vec<u8>) -> Self {
        let n = graph.vertex_count();
        assert_eq!(side.len(), n);
        let mut good = vec![0u32; n];
        let mut bad = vec![0u32; n];
        let mut counts = [0usize; 2];
        let mut bad_sum = 0u64;
        for v in 0..n {
            counts[side[v] as usize] += 1;
            for &w in graph.neighbors(v) {
                if side[w as usize] == side[v] {
                    good[v] += 1;
                } else {
                    bad[v] += 1;
                    bad_sum += 1;
                }
            }
        }
        PartitionState {
            graph,
            side,
            good,
            bad,
            counts,
            cut: bad_sum / 2,
        }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn cutsize(&self) -> u64 {
        self.cut
    }

    pub fn side_of(&self, v: usize) -> u8 {
        self.side[v]
    }

    pub fn sides(&self) -> &[u8] {
        &self.side
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.counts[0], self.counts[1])
    }

    /// Signed side-size difference |side0| − |side1|.
    pub fn imbalance(&self) -> i64 {
        self.counts[0] as i64 - self.counts[1] as i64
    }

    pub fn good_edges(&self, v: usize) -> u32 {
        self.good[v]
    }

    pub fn bad_edges(&self, v: usize) -> u32 {
        self.bad[v]
    }

    /// Fitness λ_v = g_v / (g_v + b_v); an isolated vertex gets λ = 1.
    pub fn fitness(&self, v: usize) -> f64 {
        let degree = self.good[v] + self.bad[v];
        if degree == 0 {
            1.0
        } else {
            f64::from(self.good[v]) / f64::from(degree)
        }
    }

    /// Cutsize change a flip of `v` would cause, without applying it.
    pub fn flip_delta(&self, v: usize) -> i64 {
        i64::from(self.good[v]) - i64::from(self.bad[v])
    }

    /// Moves `v` to the other side, updating g/b for v and its neighbors
    /// and the cutsize by the exact delta.
    pub fn flip(&mut self, v: usize) {
        let old_side = self.side[v];
        self.cut = (self.cut as i64 + self.flip_delta(v)) as u64;
        std::mem::swap(&mut self.good[v], &mut self.bad[v]);
        self.side[v] = 1 - old_side;
        self.counts[old_side as usize] -= 1;
        self.counts[self.side[v] as usize] += 1;
        for &w in self.graph.neighbors(v) {
            let w = w as usize;
            if self.side[w] == old_side {
                self.good[w] -= 1;
                self.bad[w] += 1;
            } else {
                self.good[w] += 1;
                self.bad[w] -= 1;
            }
        }
    }

    /// Interchanges two vertices on opposite sides; balance is preserved.
    /// The two sequential flips account exactly for a (u, v) edge if one
    /// exists.
    pub fn swap_pair(&mut self, u: usize, v: usize) {
        debug_assert_ne!(self.side[u], self.side[v]);
        self.flip(u);
        self.flip(v);
    }

    /// Compares every incrementally maintained quantity against a full
    /// recomputation. Oracle for tests.
    pub fn verify_consistent(&self) -> Result<()> {
        let fresh = PartitionState::from_sides(self.graph, self.side.clone());
        if fresh.good != self.good || fresh.bad != self.bad {
            return Err(Error::InvalidState("good/bad counts drifted".into()));
        }
        if fresh.cut != self.cut {
            return Err(Error::InvalidState(format!(
                "cutsize drifted: incremental {} vs recomputed {}",
                self.cut, fresh.cut
            )));
        }
        if fresh.counts != self.counts {
            return Err(Error::InvalidState("side counts drifted".into()));
        }
        let bad_sum: u64 = self.bad.iter().map(|&b| u64::from(b)).sum();
        if bad_sum % 2 != 0 || bad_sum / 2 != self.cut {
            return Err(Error::InvalidState("cut != sum(b)/2".into()));
        }
        Ok(())
    }
}

/// EO driver state for bipartitioning: the incremental partition state plus
/// the rank-selection machinery.
pub struct PartitionEo<'g> {
    state: PartitionState<'g>,
    selection: SelectionMode,
    heap: Option<FitnessHeap>,
    keys: Vec<(f64, u64)>,
    order: Vec<u32>,
}

impl<'g> PartitionEo<'g> {
    pub fn new(
        graph: &'g Graph,
        partition: &Partition,
        selection: SelectionMode,
        structure_seed: u64,
    ) -> Self {
        let state = PartitionState::new(graph, partition);
        let n = graph.vertex_count();
        let heap = match selection {
            SelectionMode::ExactRank => None,
            SelectionMode::HeapApprox => {
                let fitness: Vec<f64> = (0..n).map(|v| state.fitness(v)).collect();
                let mut rng = SolverRng::seed_from_u64(structure_seed);
                Some(FitnessHeap::new(&fitness, &mut rng))
            }
        };
        PartitionEo {
            state,
            selection,
            heap,
            keys: vec![(0.0, 0); n],
            order: (0..n as u32).collect(),
        }
    }

    pub fn state(&self) -> &PartitionState<'g> {
        &self.state
    }

    /// One τ-EO update: draw vertex u by fitness rank over all vertices,
    /// redraw a second vertex until it lies on the opposite side, then
    /// interchange them.
    fn swap_step<R: Rng + ?Sized>(&mut self, selector: &RankSelector, rng: &mut R) -> Result<()> {
        let (u, v) = match self.selection {
            SelectionMode::ExactRank => self.pick_pair_exact(selector, rng),
            SelectionMode::HeapApprox => self.pick_pair_heap(selector, rng)?,
        };
        self.state.swap_pair(u, v);
        if self.heap.is_some() {
            self.refresh_heap_around(u, rng);
            self.refresh_heap_around(v, rng);
        }
        Ok(())
    }

    fn pick_pair_exact<R: Rng + ?Sized>(
        &mut self,
        selector: &RankSelector,
        rng: &mut R,
    ) -> (usize, usize) {
        let n = self.state.side.len();
        // Degenerate λ values get their rank order randomized each update
        // through a fresh tiebreak key.
        for v in 0..n {
            self.keys[v] = (self.state.fitness(v), rng.gen());
        }
        let keys = &self.keys;
        self.order
            .sort_unstable_by(|&a, &b| match keys[a as usize].0.total_cmp(&keys[b as usize].0) {
                std::cmp::Ordering::Equal => (keys[a as usize].1, a).cmp(&(keys[b as usize].1, b)),
                other => other,
            });
        let u = self.order[selector.sample(rng) - 1] as usize;
        let opposite = 1 - self.state.side[u];
        for _ in 0..REDRAW_LIMIT {
            let v = self.order[selector.sample(rng) - 1] as usize;
            if self.state.side[v] == opposite {
                return (u, v);
            }
        }
        let v = self
            .order
            .iter()
            .map(|&v| v as usize)
            .find(|&v| self.state.side[v] == opposite)
            .expect("opposite side is nonempty");
        (u, v)
    }

    fn pick_pair_heap<R: Rng + ?Sized>(
        &mut self,
        selector: &RankSelector,
        rng: &mut R,
    ) -> Result<(usize, usize)> {
        let heap = self.heap.as_ref().expect("heap mode");
        let u = heap.select(selector, rng)?;
        let opposite = 1 - self.state.side[u];
        for _ in 0..REDRAW_LIMIT {
            let v = heap.select(selector, rng)?;
            if self.state.side[v] == opposite {
                return Ok((u, v));
            }
        }
        let v = (1..=heap.len())
            .map(|rank| heap.element_at(rank).unwrap())
            .find(|&v| self.state.side[v] == opposite)
            .expect("opposite side is nonempty");
        Ok((u, v))
    }

    fn refresh_heap_around<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) {
        let heap = self.heap.as_mut().expect("heap mode");
        heap.update(v, self.state.fitness(v), rng);
        for &w in self.state.graph.neighbors(v) {
            heap.update(w as usize, self.state.fitness(w as usize), rng);
        }
    }
}

impl EoProblem for PartitionEo<'_> {
    type Snapshot = Vec<u8>;

    fn element_count(&self) -> usize {
        self.state.side.len()
    }

    fn cost(&self) -> f64 {
        self.state.cut as f64
    }

    fn snapshot(&self) -> Vec<u8> {
        self.state.side.clone()
    }

    fn eo_step<R: Rng + ?Sized>(&mut self, selector: &RankSelector, rng: &mut R) -> Result<()> {
        self.swap_step(selector, rng)
    }
}

/// Full EO bipartitioning run: greedy initialization, then
/// `config.max_updates` swap updates with best-so-far tracking. The
/// snapshot in the result is the side-label vector of the best partition.
pub fn solve_partition_eo(graph: &Graph, config: &EoConfig) -> Result<RunResult<Vec<u8>>> {
    let n = graph.vertex_count();
    if n == 0 || n % 2 != 0 {
        return Err(Error::invalid_arg(format!(
            "bipartitioning needs a positive even vertex count, got {n}"
        )));
    }
    let partition = greedy_init(graph, config.init_seed())?;
    let mut problem = PartitionEo::new(graph, &partition, config.selection, config.structure_seed());
    run_eo(&mut problem, config)
}

/// Writes a partition as one `<vertex index> <side>` line per vertex.
pub fn partition_to_string(sides: &[u8]) -> String {
    let mut out = String::new();
    for (v, &s) in sides.iter().enumerate() {
        out.push_str(&format!("{v} {s}\n"));
    }
    out
}
