//! Keeps the mdbook guide honest: every chapter is included as rustdoc
//! here, so its ```rust code blocks compile and run under
//! `cargo test --doc -p exopt-guide` (and therefore under a plain
//! workspace `cargo test`).

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/rank-selection.md")]
pub mod rank_selection {}

#[doc = include_str!("../../../book/src/graph-partitioning.md")]
pub mod graph_partitioning {}

#[doc = include_str!("../../../book/src/traveling-salesman.md")]
pub mod traveling_salesman {}

#[doc = include_str!("../../../book/src/annealing-baselines.md")]
pub mod annealing_baselines {}

#[doc = include_str!("../../../book/src/exact-oracles.md")]
pub mod exact_oracles {}

#[doc = include_str!("../../../book/src/benchmarking.md")]
pub mod benchmarking {}

#[doc = include_str!("../../../book/src/file-formats.md")]
pub mod file_formats {}
