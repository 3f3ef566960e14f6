//! Simulated-annealing baselines for both problems: Metropolis acceptance,
//! geometric cooling, stage-based freeze detection, and the penalized
//! single-flip (partitioning) / uniform two-change (TSP) neighborhoods.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::PartitionState;
use crate::rank::{RunResult, SolverRng, TraceAccumulator};
use crate::seeding;
use crate::tsp::TspInstance;
use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

/// Default penalty weight on the squared side-size difference in the
/// partitioning cost, after the Johnson et al. protocol family.
pub const DEFAULT_IMBALANCE_WEIGHT: f64 = 0.05;

/// Hard cap on the number of cooling stages when no explicit move budget
/// is given.
pub const DEFAULT_MAX_STAGES: u64 = 200;

/// Annealing schedule: geometric cooling `T ← cooling·T` every
/// `stage_length` moves, stopping once `freeze_stages` consecutive stages
/// fall below the `min_accept` acceptance ratio without improving the best
/// configuration, or when the total move budget runs out.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SaSchedule {
    /// Initial temperature; `None` calibrates it from 1000 sampled moves so
    /// that the mean uphill move would be accepted with probability ~0.8.
    pub t0: Option<f64>,
    pub cooling: f64,
    pub stage_length: u64,
    pub freeze_stages: u32,
    pub min_accept: f64,
    /// Hard cap on total moves; defaults to `stage_length` ×
    /// [`DEFAULT_MAX_STAGES`].
    pub move_budget: Option<u64>,
    pub seed: u64,
}

impl SaSchedule {
    /// Partitioning defaults: temperature length 16n, cooling 0.95
    /// (Johnson et al.). Pass the length through [`SaSchedule::scaled`] for
    /// the 4x-longer variant.
    pub fn partition_default(n: usize, seed: u64) -> Self {
        SaSchedule {
            t0: None,
            cooling: 0.95,
            stage_length: 16 * n as u64,
            freeze_stages: 5,
            min_accept: 0.02,
            move_budget: None,
            seed,
        }
    }

    /// TSP defaults: temperature length 32n², cooling factor 0.9.
    pub fn tsp_default(n: usize, seed: u64) -> Self {
        SaSchedule {
            t0: None,
            cooling: 0.9,
            stage_length: 32 * (n as u64) * (n as u64),
            freeze_stages: 5,
            min_accept: 0.02,
            move_budget: None,
            seed,
        }
    }

    /// Multiplies the temperature length.
    pub fn scaled(mut self, factor: u64) -> Self {
        self.stage_length *= factor;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::invalid_arg(format!(
                "cooling factor must lie in (0, 1), got {}",
                self.cooling
            )));
        }
        if self.stage_length == 0 {
            return Err(Error::invalid_arg("stage_length must be at least 1"));
        }
        if self.freeze_stages == 0 {
            return Err(Error::invalid_arg("freeze_stages must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.min_accept) {
            return Err(Error::invalid_arg("min_accept must lie in [0, 1)"));
        }
        if let Some(t) = self.t0 {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::invalid_arg(
                    "t0 must be finite and non-negative when given",
                ));
            }
        }
        Ok(())
    }

    pub fn budget(&self) -> u64 {
        self.move_budget
            .unwrap_or_else(|| self.stage_length.saturating_mul(DEFAULT_MAX_STAGES))
    }

    fn init_seed(&self) -> u64 {
        seeding::mix_str(self.seed, "init")
    }
}

/// Metropolis rule: downhill always accepted, uphill with probability
/// exp(−Δ/T). T = 0 degenerates to pure descent.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, temp: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if temp <= 0.0 {
        return false;
    }
    rng.gen::<f64>() < (-delta / temp).exp()
}

/// Penalized partitioning cost: total = m + w·(|side0|−|side1|)².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaPartitionCost {
    pub cutsize: u64,
    pub imbalance: i64,
    pub imbalance_weight: f64,
}

impl SaPartitionCost {
    pub fn of_state(state: &PartitionState<'_>, imbalance_weight: f64) -> Self {
        SaPartitionCost {
            cutsize: state.cutsize(),
            imbalance: state.imbalance(),
            imbalance_weight,
        }
    }

    pub fn total(&self) -> f64 {
        self.cutsize as f64 + self.imbalance_weight * (self.imbalance * self.imbalance) as f64
    }
}

fn calibrated_t0<R: Rng + ?Sized, F: FnMut(&mut R) -> f64>(
    schedule: &SaSchedule,
    rng: &mut R,
    mut sample_delta: F,
) -> f64 {
    if let Some(t) = schedule.t0 {
        return t;
    }
    let mut uphill_sum = 0.0;
    let mut uphill_count = 0u32;
    for _ in 0..1000 {
        let delta = sample_delta(rng);
        if delta > 0.0 {
            uphill_sum += delta;
            uphill_count += 1;
        }
    }
    if uphill_count == 0 {
        return 1.0;
    }
    let mean_up = uphill_sum / f64::from(uphill_count);
    // exp(−mean/T) = 0.8  ⇒  T = mean / ln(1/0.8)
    mean_up / (1.0f64 / 0.8).ln()
}

/// SA for balanced bipartitioning: single-vertex flips with the imbalance
/// penalty, starting from a uniformly random balanced partition. The best
/// cutsize is tracked over balanced configurations only; if the final
/// configuration is unbalanced it is greedily rebalanced (repeatedly moving
/// the vertex from the larger side with the smallest cut increase) and kept
/// if it beats the tracked best.
pub fn solve_partition_sa(
    graph: &Graph,
    schedule: &SaSchedule,
    imbalance_weight: f64,
) -> Result<RunResult<Vec<u8>>> {
    schedule.validate()?;
    if !imbalance_weight.is_finite() || imbalance_weight < 0.0 {
        return Err(Error::invalid_arg(
            "imbalance weight must be finite and non-negative",
        ));
    }
    let n = graph.vertex_count();
    if n == 0 || n % 2 != 0 {
        return Err(Error::invalid_arg(format!(
            "bipartitioning needs a positive even vertex count, got {n}"
        )));
    }

    // Random balanced start.
    let mut init_rng = SolverRng::seed_from_u64(schedule.init_seed());
    let mut perm: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        let j = init_rng.gen_range(0..=k);
        perm.swap(k, j);
    }
    let mut side = vec![1u8; n];
    for &v in perm.iter().take(n / 2) {
        side[v] = 0;
    }
    let mut state = PartitionState::from_sides(graph, side);

    let mut rng = SolverRng::seed_from_u64(schedule.seed);
    let weight = imbalance_weight;
    let delta_of = |state: &PartitionState<'_>, v: usize| -> f64 {
        let dm = state.flip_delta(v) as f64;
        let imb = state.imbalance();
        let new_imb = if state.side_of(v) == 0 { imb - 2 } else { imb + 2 };
        dm + weight * ((new_imb * new_imb - imb * imb) as f64)
    };
    let t0 = calibrated_t0(schedule, &mut rng, |rng| {
        let v = rng.gen_range(0..n);
        delta_of(&state, v)
    });

    let budget = schedule.budget();
    let mut trace = TraceAccumulator::new(budget);
    let mut best_cut = state.cutsize();
    let mut best_sides = state.sides().to_vec();

    let mut temp = t0;
    let mut moves: u64 = 0;
    let mut frozen: u32 = 0;
    'cooling: while moves < budget && frozen < schedule.freeze_stages {
        let mut accepted: u64 = 0;
        let mut attempted: u64 = 0;
        let mut improved = false;
        for _ in 0..schedule.stage_length {
            if moves >= budget {
                break;
            }
            let v = rng.gen_range(0..n);
            let delta = delta_of(&state, v);
            attempted += 1;
            if metropolis_accept(delta, temp, &mut rng) {
                state.flip(v);
                // Zero-delta flips shuffle forever at any temperature; only
                // cost-changing acceptances say something about freezing.
                if delta != 0.0 {
                    accepted += 1;
                }
                if state.imbalance() == 0 && state.cutsize() < best_cut {
                    best_cut = state.cutsize();
                    best_sides.copy_from_slice(state.sides());
                    improved = true;
                }
            }
            trace.record(moves, SaPartitionCost::of_state(&state, weight).total());
            moves += 1;
        }
        if attempted == 0 {
            break 'cooling;
        }
        let ratio = accepted as f64 / attempted as f64;
        if ratio < schedule.min_accept && !improved {
            frozen += 1;
        } else {
            frozen = 0;
        }
        temp *= schedule.cooling;
    }

    // Greedy rebalance of the final configuration.
    while state.imbalance() != 0 {
        let from_side = if state.imbalance() > 0 { 0u8 } else { 1u8 };
        let v = (0..n)
            .filter(|&v| state.side_of(v) == from_side)
            .min_by_key(|&v| state.flip_delta(v))
            .expect("larger side is nonempty");
        state.flip(v);
    }
    if state.cutsize() < best_cut {
        best_cut = state.cutsize();
        best_sides.copy_from_slice(state.sides());
    }

    Ok(RunResult {
        best_cost: best_cut as f64,
        best_config: best_sides,
        trace: trace.finish(),
        updates_used: moves,
        wall_time_s: 0.0,
    })
}

/// SA for the TSP: uniform random two-changes over non-adjacent link pairs,
/// Metropolis acceptance on the length delta, geometric cooling.
pub fn solve_tsp_sa(instance: &TspInstance, schedule: &SaSchedule) -> Result<RunResult<Vec<u32>>> {
    schedule.validate()?;
    let n = instance.n();
    if n < 4 {
        return Err(Error::invalid_arg(
            "the two-change neighborhood needs at least 4 cities",
        ));
    }

    let mut init_rng = SolverRng::seed_from_u64(schedule.init_seed());
    let mut order: Vec<u32> = (0..n as u32).collect();
    for k in (1..n).rev() {
        let j = init_rng.gen_range(0..=k);
        order.swap(k, j);
    }

    let length_of = |order: &[u32]| -> f64 {
        (0..n)
            .map(|k| instance.distance(order[k] as usize, order[(k + 1) % n] as usize))
            .sum()
    };

    // Two random non-adjacent link indices k < l; link k joins positions
    // (k, k+1 mod n).
    let draw_pair = |rng: &mut SolverRng| -> (usize, usize) {
        loop {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let sep = (b + n - a) % n;
            if sep >= 2 && sep <= n - 2 {
                return (a.min(b), a.max(b));
            }
        }
    };
    let pair_delta = |order: &[u32], k: usize, l: usize| -> f64 {
        let (ck, ck1) = (order[k] as usize, order[k + 1] as usize);
        let (cl, cl1) = (order[l] as usize, order[(l + 1) % n] as usize);
        instance.distance(ck, cl) + instance.distance(ck1, cl1)
            - instance.distance(ck, ck1)
            - instance.distance(cl, cl1)
    };

    let mut rng = SolverRng::seed_from_u64(schedule.seed);
    let t0 = calibrated_t0(schedule, &mut rng, |rng| {
        let (k, l) = draw_pair(rng);
        pair_delta(&order, k, l)
    });

    let budget = schedule.budget();
    let mut trace = TraceAccumulator::new(budget);
    let mut length = length_of(&order);
    let mut best_length = length;
    let mut best_order = order.clone();

    let mut temp = t0;
    let mut moves: u64 = 0;
    let mut frozen: u32 = 0;
    while moves < budget && frozen < schedule.freeze_stages {
        let mut accepted: u64 = 0;
        let mut attempted: u64 = 0;
        let mut improved = false;
        for _ in 0..schedule.stage_length {
            if moves >= budget {
                break;
            }
            let (k, l) = draw_pair(&mut rng);
            let delta = pair_delta(&order, k, l);
            attempted += 1;
            if metropolis_accept(delta, temp, &mut rng) {
                // Reverse the shorter arc; both reversals realize the same
                // cyclic tour.
                if 2 * (l - k) <= n {
                    order[k + 1..=l].reverse();
                } else {
                    reverse_wrapped(&mut order, (l + 1) % n, k);
                }
                length += delta;
                if delta != 0.0 {
                    accepted += 1;
                }
                if length < best_length {
                    best_length = length;
                    best_order.copy_from_slice(&order);
                    improved = true;
                }
            }
            trace.record(moves, length);
            moves += 1;
        }
        if attempted == 0 {
            break;
        }
        // Re-anchor the float accumulation once per stage.
        length = length_of(&order);
        let ratio = accepted as f64 / attempted as f64;
        if ratio < schedule.min_accept && !improved {
            frozen += 1;
        } else {
            frozen = 0;
        }
        temp *= schedule.cooling;
    }

    Ok(RunResult {
        best_cost: best_length,
        best_config: best_order,
        trace: trace.finish(),
        updates_used: moves,
        wall_time_s: 0.0,
    })
}

/// Reverses the cyclic segment `lo..=hi` of `order`, walking forward with
/// wraparound.
fn reverse_wrapped(order: &mut [u32], lo: usize, hi: usize) {
    let n = order.len();
    let seg = (hi + n - lo) % n + 1;
    for k in 0..seg / 2 {
        let x = (lo + k) % n;
        let y = (hi + n - k) % n;
        order.swap(x, y);
    }
}
