//! EO for the symmetric TSP: instance generation (Euclidean torus and
//! random distance matrix), neighbor rank lists, the city fitness
//! λ = 3/(p+q), and the constrained two-change move.

use crate::error::{Error, Result};
use crate::partition::REDRAW_LIMIT;
use crate::rank::{
    run_eo, EoConfig, EoProblem, FitnessHeap, RankSelector, RunResult, SelectionMode, SolverRng,
};
use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Distance model of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TspKind {
    /// Points in the unit square with periodic boundary conditions.
    EuclideanTorus,
    /// Symmetric matrix of i.i.d. uniform entries; no triangle inequality.
    RandomMatrix,
}

impl TspKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TspKind::EuclideanTorus => "eucl",
            TspKind::RandomMatrix => "rand",
        }
    }
}

impl std::str::FromStr for TspKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eucl" => Ok(TspKind::EuclideanTorus),
            "rand" => Ok(TspKind::RandomMatrix),
            other => Err(Error::invalid_arg(format!(
                "unknown TSP kind {other:?} (expected \"eucl\" or \"rand\")"
            ))),
        }
    }
}

/// Distance on the unit torus: coordinate differences wrap around.
pub fn torus_distance(p: (f64, f64), q: (f64, f64)) -> f64 {
    let dx = (p.0 - q.0).abs();
    let dx = dx.min(1.0 - dx);
    let dy = (p.1 - q.1).abs();
    let dy = dy.min(1.0 - dy);
    (dx * dx + dy * dy).sqrt()
}

/// Symmetric TSP instance with precomputed neighbor rank lists.
///
/// `neighbor_ranks` row i lists every other city sorted by ascending
/// distance from i (ties broken by city index); `rank_of` is its inverse,
/// so both "who is my k-th neighbor" and "what rank does city j hold for
/// me" are O(1).
#[derive(Clone, Debug)]
pub struct TspInstance {
    kind: TspKind,
    n: usize,
    coords: Option<Vec<(f64, f64)>>,
    dist: Vec<f64>,
    neighbor_ranks: Vec<u32>,
    rank_of: Vec<u32>,
}

impl TspInstance {
    /// `n` cities placed uniformly at random in the unit square with
    /// periodic boundary conditions.
    pub fn euclidean_torus(n: usize, seed: u64) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid_arg("TSP instance needs n >= 3"));
        }
        let mut rng = SolverRng::seed_from_u64(seed);
        let coords: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
        Self::from_coords(coords)
    }

    /// Builds a torus instance from explicit coordinates in [0, 1)².
    pub fn from_coords(coords: Vec<(f64, f64)>) -> Result<Self> {
        let n = coords.len();
        if n < 3 {
            return Err(Error::invalid_arg("TSP instance needs n >= 3"));
        }
        for &(x, y) in &coords {
            if !(0.0..1.0).contains(&x) || !(0.0..1.0).contains(&y) {
                return Err(Error::invalid_arg(format!(
                    "coordinate ({x}, {y}) outside the half-open unit square"
                )));
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = torus_distance(coords[i], coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self::with_distances(
            TspKind::EuclideanTorus,
            n,
            Some(coords),
            dist,
        ))
    }

    /// Symmetric matrix with upper-triangle entries i.i.d. uniform on
    /// [0, 1) and zero diagonal.
    pub fn random_matrix(n: usize, seed: u64) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid_arg("TSP instance needs n >= 3"));
        }
        let mut rng = SolverRng::seed_from_u64(seed);
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d: f64 = rng.gen();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self::with_distances(TspKind::RandomMatrix, n, None, dist))
    }

    /// Builds a random-matrix-kind instance from a full row-major distance
    /// matrix.
    pub fn from_matrix(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid_arg("TSP instance needs n >= 3"));
        }
        if dist.len() != n * n {
            return Err(Error::invalid_arg(format!(
                "distance matrix must hold {n}x{n} entries"
            )));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::invalid_arg(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::invalid_arg(format!(
                        "distance ({i}, {j}) must be finite and non-negative"
                    )));
                }
                if d != dist[j * n + i] {
                    return Err(Error::invalid_arg(format!(
                        "asymmetric distances at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::with_distances(TspKind::RandomMatrix, n, None, dist))
    }

    fn with_distances(
        kind: TspKind,
        n: usize,
        coords: Option<Vec<(f64, f64)>>,
        dist: Vec<f64>,
    ) -> Self {
        let mut neighbor_ranks = vec![0u32; n * (n - 1)];
        let mut rank_of = vec![0u32; n * n];
        let mut row: Vec<u32> = Vec::with_capacity(n - 1);
        for i in 0..n {
            row.clear();
            row.extend((0..n as u32).filter(|&j| j as usize != i));
            row.sort_unstable_by(|&a, &b| {
                dist[i * n + a as usize]
                    .total_cmp(&dist[i * n + b as usize])
                    .then(a.cmp(&b))
            });
            for (r, &j) in row.iter().enumerate() {
                neighbor_ranks[i * (n - 1) + r] = j;
                rank_of[i * n + j as usize] = (r + 1) as u32;
            }
        }
        TspInstance {
            kind,
            n,
            coords,
            dist,
            neighbor_ranks,
            rank_of,
        }
    }

    pub fn kind(&self) -> TspKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// The city at distance-rank `rank` (1-based) from city `i`.
    #[inline]
    pub fn neighbor_at_rank(&self, i: usize, rank: usize) -> usize {
        self.neighbor_ranks[i * (self.n - 1) + rank - 1] as usize
    }

    /// The 1-based distance rank city `j` holds in city `i`'s list.
    #[inline]
    pub fn rank_of_neighbor(&self, i: usize, j: usize) -> usize {
        debug_assert_ne!(i, j);
        self.rank_of[i * self.n + j] as usize
    }
}

/// Cyclic city permutation with its inverse position table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tour {
    order: Vec<u32>,
    pos: Vec<u32>,
}

impl Tour {
    pub fn new(order: Vec<u32>) -> Result<Self> {
        let n = order.len();
        if n < 3 {
            return Err(Error::invalid_arg("tour needs at least 3 cities"));
        }
        let mut pos = vec![u32::MAX; n];
        for (k, &city) in order.iter().enumerate() {
            let c = city as usize;
            if c >= n {
                return Err(Error::invalid_arg(format!("city {c} out of range")));
            }
            if pos[c] != u32::MAX {
                return Err(Error::invalid_arg(format!("city {c} appears twice")));
            }
            pos[c] = k as u32;
        }
        Ok(Tour { order, pos })
    }

    /// Uniformly random permutation (Fisher-Yates).
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = SolverRng::seed_from_u64(seed);
        Tour::new(random_permutation(n, &mut rng))
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn position_of(&self, city: usize) -> usize {
        self.pos[city] as usize
    }

    /// The two cities linked to `city` in the cyclic order.
    pub fn links_of(&self, city: usize) -> (usize, usize) {
        let n = self.order.len();
        let p = self.pos[city] as usize;
        (
            self.order[(p + n - 1) % n] as usize,
            self.order[(p + 1) % n] as usize,
        )
    }
}

fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut order: Vec<u32> = (0..n as u32).collect();
    for k in (1..n).rev() {
        let j = rng.gen_range(0..=k);
        order.swap(k, j);
    }
    order
}

/// Total tour length: sum of consecutive distances with wraparound.
pub fn tour_length(instance: &TspInstance, tour: &Tour) -> f64 {
    let order = tour.order();
    let n = order.len();
    let mut total = 0.0;
    for k in 0..n {
        total += instance.distance(order[k] as usize, order[(k + 1) % n] as usize);
    }
    total
}

/// Fitness of one city: the distance ranks p, q of its two tour links and
/// λ = 3/(p+q). λ = 1 exactly when the city is linked to its first and
/// second nearest neighbors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CityFitness {
    pub p: usize,
    pub q: usize,
    pub lambda: f64,
}

pub fn city_fitness(instance: &TspInstance, tour: &Tour, city: usize) -> CityFitness {
    let (left, right) = tour.links_of(city);
    let p = instance.rank_of_neighbor(city, left);
    let q = instance.rank_of_neighbor(city, right);
    CityFitness {
        p,
        q,
        lambda: 3.0 / (p + q) as f64,
    }
}

/// EO driver state for the TSP: tour, cached length, per-city fitness and
/// the selection machinery. Cities are ranked by λ (rank 1 = worst) through
/// the run selector; the reconnection target is drawn from the selected
/// city's distance rank list through a second selector of size n−1 with the
/// same τ.
pub struct TspEo<'a> {
    instance: &'a TspInstance,
    order: Vec<u32>,
    pos: Vec<u32>,
    length: f64,
    lambda: Vec<f64>,
    selection: SelectionMode,
    heap: Option<FitnessHeap>,
    neighbor_selector: RankSelector,
    keys: Vec<(f64, u64)>,
    rank_order: Vec<u32>,
    steps_since_resync: u32,
}

impl<'a> TspEo<'a> {
    pub fn new(
        instance: &'a TspInstance,
        tour: Tour,
        tau: f64,
        selection: SelectionMode,
        structure_seed: u64,
    ) -> Result<Self> {
        let n = instance.n();
        if n < 4 {
            return Err(Error::invalid_arg(
                "the two-change move needs at least 4 cities",
            ));
        }
        if tour.n() != n {
            return Err(Error::invalid_arg("tour size does not match instance"));
        }
        let lambda: Vec<f64> = (0..n)
            .map(|c| city_fitness(instance, &tour, c).lambda)
            .collect();
        let heap = match selection {
            SelectionMode::ExactRank => None,
            SelectionMode::HeapApprox => {
                let mut rng = SolverRng::seed_from_u64(structure_seed);
                Some(FitnessHeap::new(&lambda, &mut rng))
            }
        };
        let length = tour_length(instance, &tour);
        let Tour { order, pos } = tour;
        Ok(TspEo {
            instance,
            order,
            pos,
            length,
            lambda,
            selection,
            heap,
            neighbor_selector: RankSelector::new(n - 1, tau)?,
            keys: vec![(0.0, 0); n],
            rank_order: (0..n as u32).collect(),
            steps_since_resync: 0,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn tour(&self) -> Tour {
        Tour::new(self.order.clone()).expect("internal order is a permutation")
    }

    fn pick_city<R: Rng + ?Sized>(&mut self, selector: &RankSelector, rng: &mut R) -> Result<usize> {
        match self.selection {
            SelectionMode::ExactRank => {
                let n = self.order.len();
                for c in 0..n {
                    self.keys[c] = (self.lambda[c], rng.gen());
                }
                let keys = &self.keys;
                self.rank_order.sort_unstable_by(|&a, &b| {
                    match keys[a as usize].0.total_cmp(&keys[b as usize].0) {
                        std::cmp::Ordering::Equal => {
                            (keys[a as usize].1, a).cmp(&(keys[b as usize].1, b))
                        }
                        other => other,
                    }
                });
                Ok(self.rank_order[selector.sample(rng) - 1] as usize)
            }
            SelectionMode::HeapApprox => self.heap.as_ref().expect("heap mode").select(selector, rng),
        }
    }

    /// Draws the reconnection target from city `i`'s distance rank list,
    /// rejecting the removed link partner `a` and the kept partner `b`.
    fn pick_neighbor<R: Rng + ?Sized>(&self, i: usize, a: usize, b: usize, rng: &mut R) -> usize {
        for _ in 0..REDRAW_LIMIT {
            let rank = self.neighbor_selector.sample(rng);
            let j = self.instance.neighbor_at_rank(i, rank);
            if j != a && j != b {
                return j;
            }
        }
        // Only reachable when τ concentrates all practical mass on ranks
        // held by a and b; take the closest admissible neighbor.
        (1..self.instance.n())
            .map(|rank| self.instance.neighbor_at_rank(i, rank))
            .find(|&j| j != a && j != b)
            .expect("n >= 4 leaves an admissible neighbor")
    }

    /// Applies the unique two-change that removes links (i, a) and (j, c)
    /// and inserts (i, j) and (a, c), where a is a tour link of i and c is
    /// the tour link of j on the segment running from i to j away from a.
    /// Updates the cached length and the fitness of exactly {i, j, a, c}.
    pub fn two_change<R: Rng + ?Sized>(&mut self, i: usize, a: usize, j: usize, rng: &mut R) {
        let n = self.order.len();
        let pi = self.pos[i] as usize;
        let pj = self.pos[j] as usize;
        let prev = self.order[(pi + n - 1) % n] as usize;

        let (c, seg_lo, seg_hi) = if a == prev {
            // Forward walk from i reaches j before a; c precedes j.
            let pc = (pj + n - 1) % n;
            (self.order[pc] as usize, pi, pc)
        } else {
            // Mirror image: backward walk from i reaches j; c follows j.
            let pc = (pj + 1) % n;
            (self.order[pc] as usize, pc, pi)
        };

        let delta = self.instance.distance(i, j) + self.instance.distance(a, c)
            - self.instance.distance(i, a)
            - self.instance.distance(j, c);
        self.reverse_cyclic(seg_lo, seg_hi);
        self.length += delta;

        for &city in &[i, j, a, c] {
            let lam = self.current_lambda(city);
            self.lambda[city] = lam;
            if let Some(heap) = self.heap.as_mut() {
                heap.update(city, lam, rng);
            }
        }

        self.steps_since_resync += 1;
        if self.steps_since_resync >= 1 << 16 {
            // Re-anchor the incrementally updated length; pure float
            // hygiene, no observable effect at test tolerances.
            self.length = self.recompute_length();
            self.steps_since_resync = 0;
        }
    }

    fn current_lambda(&self, city: usize) -> f64 {
        let n = self.order.len();
        let p = self.pos[city] as usize;
        let left = self.order[(p + n - 1) % n] as usize;
        let right = self.order[(p + 1) % n] as usize;
        let pr = self.instance.rank_of_neighbor(city, left);
        let qr = self.instance.rank_of_neighbor(city, right);
        3.0 / (pr + qr) as f64
    }

    /// Reverses the cyclic segment of positions `lo..=hi` (walking
    /// forward, possibly wrapping). Reversing the complement yields the
    /// same cyclic tour, so the shorter of the two is chosen.
    fn reverse_cyclic(&mut self, mut lo: usize, mut hi: usize) {
        let n = self.order.len();
        let seg = (hi + n - lo) % n + 1;
        if seg * 2 > n {
            let new_lo = (hi + 1) % n;
            let new_hi = (lo + n - 1) % n;
            lo = new_lo;
            hi = new_hi;
        }
        let seg = (hi + n - lo) % n + 1;
        for k in 0..seg / 2 {
            let x = (lo + k) % n;
            let y = (hi + n - k) % n;
            self.order.swap(x, y);
            self.pos[self.order[x] as usize] = x as u32;
            self.pos[self.order[y] as usize] = y as u32;
        }
    }

    fn recompute_length(&self) -> f64 {
        let n = self.order.len();
        (0..n)
            .map(|k| {
                self.instance
                    .distance(self.order[k] as usize, self.order[(k + 1) % n] as usize)
            })
            .sum()
    }

    /// Compares the incrementally maintained tour, length and fitness
    /// against full recomputation. Oracle for tests.
    pub fn verify_consistent(&self) -> Result<()> {
        let tour = Tour::new(self.order.clone())
            .map_err(|e| Error::InvalidState(format!("order is not a permutation: {e}")))?;
        for (city, &p) in self.pos.iter().enumerate() {
            if tour.position_of(city) != p as usize {
                return Err(Error::InvalidState(format!("pos[{city}] drifted")));
            }
        }
        let exact = tour_length(self.instance, &tour);
        let scale = exact.abs().max(1.0);
        if (self.length - exact).abs() / scale > 1e-9 {
            return Err(Error::InvalidState(format!(
                "length drifted: incremental {} vs recomputed {exact}",
                self.length
            )));
        }
        for c in 0..self.order.len() {
            let lam = city_fitness(self.instance, &tour, c).lambda;
            if self.lambda[c] != lam {
                return Err(Error::InvalidState(format!("lambda[{c}] drifted")));
            }
        }
        Ok(())
    }
}

impl EoProblem for TspEo<'_> {
    type Snapshot = Vec<u32>;

    fn element_count(&self) -> usize {
        self.order.len()
    }

    fn cost(&self) -> f64 {
        self.length
    }

    fn snapshot(&self) -> Vec<u32> {
        self.order.clone()
    }

    fn eo_step<R: Rng + ?Sized>(&mut self, selector: &RankSelector, rng: &mut R) -> Result<()> {
        let i = self.pick_city(selector, rng)?;
        let n = self.order.len();
        let p = self.pos[i] as usize;
        let prev = self.order[(p + n - 1) % n] as usize;
        let next = self.order[(p + 1) % n] as usize;
        let d_prev = self.instance.distance(i, prev);
        let d_next = self.instance.distance(i, next);
        let (a, b) = match d_prev.total_cmp(&d_next) {
            std::cmp::Ordering::Greater => (prev, next),
            std::cmp::Ordering::Less => (next, prev),
            std::cmp::Ordering::Equal => {
                if rng.gen::<bool>() {
                    (prev, next)
                } else {
                    (next, prev)
                }
            }
        };
        let j = self.pick_neighbor(i, a, b, rng);
        self.two_change(i, a, j, rng);
        Ok(())
    }
}

/// Full EO TSP run: uniformly random initial tour, then
/// `config.max_updates` constrained two-change updates. The snapshot is the
/// city order of the best tour.
pub fn solve_tsp_eo(instance: &TspInstance, config: &EoConfig) -> Result<RunResult<Vec<u32>>> {
    let tour = Tour::random(instance.n(), config.init_seed())?;
    let mut problem = TspEo::new(
        instance,
        tour,
        config.tau,
        config.selection,
        config.structure_seed(),
    )?;
    run_eo(&mut problem, config)
}

/// Writes an instance file: `EUCL <n>` plus n coordinate lines, or
/// `MAT <n>` plus n−1 upper-triangle rows. Floats use shortest round-trip
/// formatting, so read(write(x)) is bit-exact.
pub fn write_tsp_instance(instance: &TspInstance, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    write_tsp_instance_to(instance, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_tsp_instance_to(instance: &TspInstance, out: &mut impl Write) -> Result<()> {
    let n = instance.n();
    match instance.kind() {
        TspKind::EuclideanTorus => {
            let coords = instance.coords().ok_or_else(|| {
                Error::InvalidState("euclidean instance without coordinates".into())
            })?;
            writeln!(out, "EUCL {n}")?;
            for &(x, y) in coords {
                writeln!(out, "{x} {y}")?;
            }
        }
        TspKind::RandomMatrix => {
            writeln!(out, "MAT {n}")?;
            let mut line = String::new();
            for i in 0..n - 1 {
                line.clear();
                for j in (i + 1)..n {
                    if j > i + 1 {
                        line.push(' ');
                    }
                    line.push_str(&instance.distance(i, j).to_string());
                }
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(())
}

pub fn tsp_instance_to_string(instance: &TspInstance) -> String {
    let mut buf = Vec::new();
    write_tsp_instance_to(instance, &mut buf).expect("write to Vec cannot fail");
    String::from_utf8(buf).expect("format is ASCII")
}

pub fn read_tsp_instance(path: impl AsRef<Path>) -> Result<TspInstance> {
    let text = fs::read_to_string(path)?;
    parse_tsp_instance(&text)
}

pub fn parse_tsp_instance(text: &str) -> Result<TspInstance> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header line"))?;
    let mut head = header.split_ascii_whitespace();
    let tag = head
        .next()
        .ok_or_else(|| Error::parse(header_no, "empty header"))?;
    let n: usize = head
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(header_no, "malformed header: expected `EUCL <n>` or `MAT <n>`"))?;
    if head.next().is_some() {
        return Err(Error::parse(header_no, "trailing tokens in header"));
    }
    if n < 3 {
        return Err(Error::parse(header_no, "TSP instance needs n >= 3"));
    }

    match tag {
        "EUCL" => {
            let mut coords = Vec::with_capacity(n);
            for k in 0..n {
                let (line_no, line) = lines
                    .next()
                    .ok_or_else(|| Error::parse(0, format!("missing coordinate line {}", k + 1)))?;
                let mut it = line.split_ascii_whitespace();
                let x: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(line_no, "expected `<x> <y>`"))?;
                let y: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(line_no, "expected `<x> <y>`"))?;
                if it.next().is_some() {
                    return Err(Error::parse(line_no, "trailing tokens"));
                }
                if !(0.0..1.0).contains(&x) || !(0.0..1.0).contains(&y) {
                    return Err(Error::parse(line_no, "coordinates must lie in [0, 1)"));
                }
                coords.push((x, y));
            }
            TspInstance::from_coords(coords)
        }
        "MAT" => {
            let mut dist = vec![0.0; n * n];
            for i in 0..n - 1 {
                let (line_no, line) = lines
                    .next()
                    .ok_or_else(|| Error::parse(0, format!("missing matrix row {}", i + 1)))?;
                let mut it = line.split_ascii_whitespace();
                for j in (i + 1)..n {
                    let d: f64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| {
                            Error::parse(line_no, format!("row {} needs {} entries", i + 1, n - i - 1))
                        })?;
                    if !d.is_finite() || d < 0.0 {
                        return Err(Error::parse(line_no, "distances must be finite and non-negative"));
                    }
                    dist[i * n + j] = d;
                    dist[j * n + i] = d;
                }
                if it.next().is_some() {
                    return Err(Error::parse(line_no, "trailing tokens"));
                }
            }
            TspInstance::from_matrix(n, dist)
        }
        other => Err(Error::parse(
            header_no,
            format!("unknown instance tag {other:?}"),
        )),
    }
}

/// One line of n space-separated 0-based city indices.
pub fn tour_to_string(tour: &Tour) -> String {
    let mut s = String::new();
    for (k, &c) in tour.order().iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        s.push_str(&c.to_string());
    }
    s.push('\n');
    s
}

pub fn parse_tour(text: &str, n: usize) -> Result<Tour> {
    let order: Vec<u32> = text
        .split_ascii_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::parse(1, format!("invalid city index {t:?}")))
        })
        .collect::<Result<_>>()?;
    if order.len() != n {
        return Err(Error::parse(
            1,
            format!("tour lists {} cities, expected {n}", order.len()),
        ));
    }
    Tour::new(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_metric_wraps_around() {
        assert!((torus_distance((0.1, 0.5), (0.9, 0.5)) - 0.2).abs() < 1e-15);
        assert_eq!(torus_distance((0.25, 0.25), (0.25, 0.25)), 0.0);
    }

    #[test]
    fn torus_diameter_bounds_distances() {
        let inst = TspInstance::euclidean_torus(64, 3).unwrap();
        let bound = std::f64::consts::SQRT_2 / 2.0;
        for i in 0..64 {
            for j in 0..64 {
                assert!(inst.distance(i, j) <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn neighbor_ranks_are_sorted_permutations() {
        let inst = TspInstance::euclidean_torus(16, 9).unwrap();
        for i in 0..16 {
            let row: Vec<usize> = (1..16).map(|r| inst.neighbor_at_rank(i, r)).collect();
            let mut sorted = row.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..16).filter(|&j| j != i).collect::<Vec<_>>());
            for r in 1..15 {
                assert!(inst.distance(i, row[r - 1]) <= inst.distance(i, row[r]));
            }
            for (r, &j) in row.iter().enumerate() {
                assert_eq!(inst.rank_of_neighbor(i, j), r + 1);
            }
        }
    }

    #[test]
    fn random_matrix_is_symmetric_zero_diagonal() {
        let inst = TspInstance::random_matrix(40, 4).unwrap();
        for i in 0..40 {
            assert_eq!(inst.distance(i, i), 0.0);
            for j in 0..40 {
                assert_eq!(inst.distance(i, j), inst.distance(j, i));
            }
        }
    }

    #[test]
    fn random_matrix_mean_near_half() {
        let n = 256;
        let inst = TspInstance::random_matrix(n, 11).unwrap();
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += inst.distance(i, j);
                count += 1;
            }
        }
        let mean = sum / count as f64;
        // 3σ of the mean of count uniform[0,1) draws.
        let bound = 3.0 * (1.0f64 / 12.0).sqrt() / (count as f64).sqrt();
        assert!((mean - 0.5).abs() < bound, "mean {mean} vs 0.5 ± {bound}");
    }

    #[test]
    fn random_matrix_violates_triangle_inequality() {
        let n = 64;
        let inst = TspInstance::random_matrix(n, 0).unwrap();
        let mut found = false;
        'scan: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i != j && j != k && i != k
                        && inst.distance(i, k) > inst.distance(i, j) + inst.distance(j, k)
                    {
                        found = true;
                        break 'scan;
                    }
                }
            }
        }
        assert!(found, "expected at least one triangle violation");
    }

    /// Line-metric instance: d(i, j) = |i - j| scaled into [0, 1). City 0's
    /// k-th nearest neighbor is city k.
    fn line_instance(n: usize) -> TspInstance {
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = (i as f64 - j as f64).abs() / n as f64;
            }
        }
        TspInstance::from_matrix(n, dist).unwrap()
    }

    #[test]
    fn city_fitness_examples() {
        let inst = line_instance(16);
        // City 0 linked to its 1st and 2nd nearest neighbors.
        let mut order: Vec<u32> = (0..16).collect();
        order[0] = 1;
        order[1] = 0;
        let tour = Tour::new(order).unwrap(); // ... 15, 1, 0, 2, 3, ...
        let f = city_fitness(&inst, &tour, 0);
        assert_eq!((f.p.min(f.q), f.p.max(f.q)), (1, 2));
        assert_eq!(f.lambda, 1.0);

        // Links at ranks 2 and 4.
        let tour = Tour::new(vec![2, 0, 4, 1, 3, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]).unwrap();
        let f = city_fitness(&inst, &tour, 0);
        assert_eq!((f.p.min(f.q), f.p.max(f.q)), (2, 4));
        assert_eq!(f.lambda, 0.5);

        // Worst case: links at ranks n-2 and n-1.
        let tour = Tour::new(vec![14, 0, 15, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13]).unwrap();
        let f = city_fitness(&inst, &tour, 0);
        assert_eq!((f.p.min(f.q), f.p.max(f.q)), (14, 15));
        assert!((f.lambda - 3.0 / 29.0).abs() < 1e-15);
    }

    #[test]
    fn tour_length_invariant_under_rotation_and_reversal() {
        let inst = TspInstance::random_matrix(9, 5).unwrap();
        let base = Tour::new(vec![3, 1, 4, 0, 5, 2, 6, 8, 7]).unwrap();
        let len = tour_length(&inst, &base);

        let mut rotated = base.order().to_vec();
        rotated.rotate_left(4);
        assert!((tour_length(&inst, &Tour::new(rotated).unwrap()) - len).abs() < 1e-12);

        let mut reversed = base.order().to_vec();
        reversed.reverse();
        assert!((tour_length(&inst, &Tour::new(reversed).unwrap()) - len).abs() < 1e-12);
    }

    #[test]
    fn tour_rejects_non_permutations() {
        assert!(Tour::new(vec![0, 1, 1, 2]).is_err());
        assert!(Tour::new(vec![0, 1, 4, 2]).is_err());
        assert!(Tour::new(vec![0, 1]).is_err());
    }

    #[test]
    fn forced_two_change_on_four_cities() {
        // d(0,3) is the longest link at city 0, so a = 3; j must avoid
        // {a=3, b=1}, leaving j = 2. The unique reconnection removes (2, c)
        // with c = 1 and yields the tour with links {0-1, 0-2, 1-3, 2-3}.
        let mut dist = vec![0.0; 16];
        let pairs = [(0usize, 1usize, 0.30), (0, 2, 0.45), (0, 3, 0.50),
                     (1, 2, 0.20), (1, 3, 0.35), (2, 3, 0.25)];
        for &(i, j, d) in &pairs {
            dist[i * 4 + j] = d;
            dist[j * 4 + i] = d;
        }
        let inst = TspInstance::from_matrix(4, dist).unwrap();
        let tour = Tour::new(vec![0, 1, 2, 3]).unwrap();
        let mut state = TspEo::new(&inst, tour, 4.0, SelectionMode::ExactRank, 0).unwrap();
        let mut rng = SolverRng::seed_from_u64(1);
        state.two_change(0, 3, 2, &mut rng);
        state.verify_consistent().unwrap();
        let tour = state.tour();
        let mut links: Vec<(usize, usize)> = Vec::new();
        for c in 0..4 {
            let (l, r) = tour.links_of(c);
            for other in [l, r] {
                if c < other {
                    links.push((c, other));
                }
            }
        }
        links.sort_unstable();
        links.dedup();
        assert_eq!(links, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        let expected = 0.30 + 0.45 + 0.35 + 0.25;
        assert!((state.length() - expected).abs() < 1e-12);
    }

    #[test]
    fn eo_moves_keep_tours_valid_and_lengths_exact() {
        for kind_seed in 0..4 {
            let inst = if kind_seed % 2 == 0 {
                TspInstance::euclidean_torus(24, kind_seed).unwrap()
            } else {
                TspInstance::random_matrix(24, kind_seed).unwrap()
            };
            for mode in [SelectionMode::ExactRank, SelectionMode::HeapApprox] {
                let tour = Tour::random(24, 7 + kind_seed).unwrap();
                let mut state = TspEo::new(&inst, tour, 4.0, mode, 3).unwrap();
                let selector = RankSelector::new(24, 4.0).unwrap();
                let mut rng = SolverRng::seed_from_u64(kind_seed);
                for step in 0..600 {
                    state.eo_step(&selector, &mut rng).unwrap();
                    if step % 50 == 0 {
                        state.verify_consistent().unwrap();
                    }
                }
                state.verify_consistent().unwrap();
                if let Some(heap) = &state.heap {
                    assert!(heap.satisfies_heap_property());
                }
            }
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let inst = TspInstance::euclidean_torus(16, 42).unwrap();
        let cfg = EoConfig::new(4.0, 4096, 13);
        let a = solve_tsp_eo(&inst, &cfg).unwrap();
        let b = solve_tsp_eo(&inst, &cfg).unwrap();
        assert_eq!(a, b);
        let tour = Tour::new(a.best_config).unwrap();
        assert!((tour_length(&inst, &tour) - a.best_cost).abs() < 1e-9);
    }

    #[test]
    fn solver_rejects_tiny_instances() {
        let inst = TspInstance::random_matrix(3, 0).unwrap();
        assert!(solve_tsp_eo(&inst, &EoConfig::new(4.0, 10, 0)).is_err());
    }

    #[test]
    fn instance_files_round_trip() {
        let eucl = TspInstance::euclidean_torus(12, 77).unwrap();
        let text = tsp_instance_to_string(&eucl);
        let back = parse_tsp_instance(&text).unwrap();
        assert_eq!(back.kind(), TspKind::EuclideanTorus);
        assert_eq!(back.coords().unwrap(), eucl.coords().unwrap());
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(back.distance(i, j), eucl.distance(i, j));
            }
        }

        let mat = TspInstance::random_matrix(9, 5).unwrap();
        let text = tsp_instance_to_string(&mat);
        let back = parse_tsp_instance(&text).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(back.distance(i, j), mat.distance(i, j));
            }
        }
    }

    #[test]
    fn instance_parse_errors() {
        assert!(matches!(
            parse_tsp_instance("NOPE 4\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_tsp_instance("EUCL 3\n0.5 0.5\n0.1 1.5\n0.2 0.2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_tsp_instance("MAT 3\n0.5\n0.2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn tour_file_round_trip() {
        let tour = Tour::new(vec![4, 0, 3, 1, 2]).unwrap();
        let text = tour_to_string(&tour);
        assert_eq!(text, "4 0 3 1 2\n");
        assert_eq!(parse_tour(&text, 5).unwrap(), tour);
        assert!(parse_tour(&text, 6).is_err());
    }
}
