//! Extremal optimization (τ-EO) for balanced graph bipartitioning and the
//! symmetric traveling salesman problem, plus the apparatus to study it:
//! simulated-annealing baselines, exact small-instance oracles, instance
//! generators and a reproducible benchmark harness.
//!
//! The method treats each component of a configuration (vertex, city) as a
//! species with a fitness in `[0, 1]`, ranks them worst to best every
//! update, draws a rank from the power law P(n) ∝ n^(-τ) and forces the
//! drawn component into a new arrangement unconditionally. The best
//! configuration ever visited is the answer.
//!
//! Start with [`partition::solve_partition_eo`] or [`tsp::solve_tsp_eo`];
//! the guide in `book/` walks through the concepts chapter by chapter.
//!
//! Every solver is deterministic for a fixed seed. Randomness comes from
//! seeded ChaCha8 streams ([`SolverRng`]); independent streams are derived
//! by the integer mixing in [`seeding`].

pub mod bench;
pub mod error;
pub mod exact;
pub mod graph;
pub mod partition;
pub mod rank;
pub mod sa;
pub mod seeding;
pub mod tsp;

pub use error::{Error, Result};
pub use rank::{
    run_eo, EoConfig, EoProblem, FitnessHeap, RankSelector, RunResult, SelectionMode, SolverRng,
    TraceBin, RNG_ALGORITHM,
};
