//! `exopt` command line: instance generators, solver front end, benchmark
//! harness and the plot-ready CSV exports.
//!
//! Exit codes: 0 success, 2 argument/input error, 3 capacity error,
//! 4 fit failure.

use clap::{Parser, Subcommand};
use exopt::bench::{
    self, fit_scaling, parse_plan, parse_records_csv, run_plan, sa_relative_error, Method, Problem,
    RunReport, RunSummary, Solution,
};
use exopt::error::Error;
use exopt::exact::{exact_partition, exact_tsp};
use exopt::graph::{generate_geometric, read_graph, write_graph, GeometricSpec, Graph};
use exopt::partition::{partition_to_string, solve_partition_eo};
use exopt::rank::{EoConfig, RunResult, SelectionMode, TraceBin, RNG_ALGORITHM};
use exopt::sa::{solve_partition_sa, solve_tsp_sa, SaSchedule};
use exopt::tsp::{
    read_tsp_instance, solve_tsp_eo, tour_to_string, write_tsp_instance, Tour, TspInstance,
    TspKind,
};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "exopt", version, about = "Extremal optimization solver toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random geometric graph and write it in the adjacency
    /// format.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Generate a TSP instance (Euclidean torus or random distance matrix).
    GenTsp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Solve one instance with EO, SA or the exact oracle; writes a JSON
    /// run report.
    Solve {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        method: String,
        #[arg(long = "in")]
        input: PathBuf,
        /// Rank-distribution exponent; defaults to 1.4 (partition), 4.0
        /// (Euclidean TSP) or 4.4 (random-matrix TSP).
        #[arg(long)]
        tau: Option<f64>,
        /// EO update steps; defaults to 200n (partition) or 16n² (TSP).
        #[arg(long)]
        updates: Option<u64>,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "exact")]
        selection: String,
        /// SA initial temperature: `auto` or a number.
        #[arg(long, default_value = "auto")]
        t0: String,
        /// SA geometric cooling factor; defaults to 0.95 (partition) or
        /// 0.9 (TSP).
        #[arg(long)]
        cooling: Option<f64>,
        /// SA moves per temperature stage; defaults to 16n (partition) or
        /// 32n² (TSP).
        #[arg(long)]
        stage_length: Option<u64>,
        #[arg(long, default_value_t = exopt::sa::DEFAULT_IMBALANCE_WEIGHT)]
        imbalance_weight: f64,
        /// Record wall times in the report (off by default so reruns are
        /// byte-identical).
        #[arg(long)]
        timing: bool,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the best solution as plain text (partition sides or
        /// tour order).
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run an experiment plan and write the results CSV.
    Bench {
        #[arg(long)]
        plan: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        timing: bool,
    },
    /// Fit the finite-size scaling law to EO records from a results CSV.
    FitScaling {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        nu: f64,
    },
    /// SA relative-error table from a results CSV.
    SaError {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Convert a solve run report to a trace CSV.
    Trace {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(match e {
            Error::Capacity(_) => 3,
            Error::FitFailure(_) => 4,
            _ => 2,
        });
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::GenGraph { n, alpha, seed, out } => {
            let graph = generate_geometric(&GeometricSpec::new(n, alpha, seed))?;
            write_graph(&graph, &out)?;
            println!(
                "wrote {} (n={}, m={}, mean connectivity {:.3})",
                out.display(),
                graph.vertex_count(),
                graph.edge_count(),
                graph.mean_connectivity()
            );
            Ok(())
        }
        Command::GenTsp { n, kind, seed, out } => {
            let kind: TspKind = kind.parse()?;
            let inst = match kind {
                TspKind::EuclideanTorus => TspInstance::euclidean_torus(n, seed)?,
                TspKind::RandomMatrix => TspInstance::random_matrix(n, seed)?,
            };
            write_tsp_instance(&inst, &out)?;
            println!("wrote {} (n={}, kind={})", out.display(), n, kind.as_str());
            Ok(())
        }
        Command::Solve {
            problem,
            method,
            input,
            tau,
            updates,
            runs,
            seed,
            selection,
            t0,
            cooling,
            stage_length,
            imbalance_weight,
            timing,
            out,
            solution,
        } => {
            let problem: Problem = problem.parse()?;
            let method: Method = method.parse()?;
            let selection: SelectionMode = selection.parse()?;
            let t0 = match t0.as_str() {
                "auto" => None,
                v => Some(v.parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("--t0 expects `auto` or a number, got {v:?}"))
                })?),
            };
            if runs == 0 {
                return Err(Error::InvalidArgument("--runs must be at least 1".into()));
            }
            let report = match problem {
                Problem::Partition => {
                    let graph = read_graph(&input)?;
                    solve_partition(
                        &graph, method, tau, updates, runs, seed, selection, t0, cooling,
                        stage_length, imbalance_weight, timing,
                    )?
                }
                Problem::Tsp => {
                    let inst = read_tsp_instance(&input)?;
                    solve_tsp(
                        &inst, method, tau, updates, runs, seed, selection, t0, cooling,
                        stage_length, timing,
                    )?
                }
            };
            if let Some(path) = solution {
                let text = match &report.best_config {
                    Solution::Sides(sides) => partition_to_string(sides),
                    Solution::Tour(order) => tour_to_string(&Tour::new(order.clone())?),
                };
                fs::write(path, text)?;
            }
            println!(
                "{} {} on n={}: best cost {} over {} run(s)",
                report.method.as_str(),
                report.problem.as_str(),
                report.n,
                report.best_cost,
                report.runs.len()
            );
            bench::write_run_report(&report, &out)?;
            Ok(())
        }
        Command::Bench { plan, out, timing } => {
            let text = fs::read_to_string(&plan)?;
            let plan = parse_plan(&text)?;
            let records = run_plan(&plan, timing)?;
            bench::write_records_csv(&records, &out)?;
            println!("wrote {} ({} records)", out.display(), records.len());
            Ok(())
        }
        Command::FitScaling { input, nu } => {
            let text = fs::read_to_string(&input)?;
            let records = parse_records_csv(&text)?;
            let fit = fit_scaling(&records, nu)?;
            println!("nu = {}", fit.nu);
            println!("alpha0 = {:.6}", fit.alpha0);
            println!("beta = {:.6}", fit.beta);
            println!("amplitude = {:.6}", fit.amplitude);
            println!("residual = {:.6e}", fit.residual);
            Ok(())
        }
        Command::SaError { input, out } => {
            let text = fs::read_to_string(&input)?;
            let records = parse_records_csv(&text)?;
            let rows = sa_relative_error(&records)?;
            let csv = bench::sa_error_to_csv(&rows);
            match out {
                Some(path) => fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Trace { input, out } => {
            let report = bench::read_run_report(&input)?;
            fs::write(&out, bench::trace_to_csv(&report.trace))?;
            println!("wrote {} ({} bins)", out.display(), report.trace.len());
            Ok(())
        }
    }
}

struct BestRuns<C> {
    summaries: Vec<RunSummary>,
    best_index: usize,
    best: RunResult<C>,
}

fn best_of<C: Clone, F: FnMut(u64) -> Result<RunResult<C>, Error>>(
    seeds: &[u64],
    timing: bool,
    mut solve: F,
) -> Result<BestRuns<C>, Error> {
    let mut summaries = Vec::with_capacity(seeds.len());
    let mut best: Option<(usize, RunResult<C>)> = None;
    for (k, &seed) in seeds.iter().enumerate() {
        let started = Instant::now();
        let result = solve(seed)?;
        let wall = if timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        summaries.push(RunSummary {
            run: k,
            seed,
            best_cost: result.best_cost,
            updates_used: result.updates_used,
            wall_time_s: wall,
        });
        let better = match &best {
            None => true,
            Some((_, b)) => result.best_cost < b.best_cost,
        };
        if better {
            best = Some((k, result));
        }
    }
    let (best_index, best) = best.expect("at least one run");
    Ok(BestRuns {
        summaries,
        best_index,
        best,
    })
}

#[allow(clippy::too_many_arguments)]
fn solve_partition(
    graph: &Graph,
    method: Method,
    tau: Option<f64>,
    updates: Option<u64>,
    runs: usize,
    seed: u64,
    selection: SelectionMode,
    t0: Option<f64>,
    cooling: Option<f64>,
    stage_length: Option<u64>,
    imbalance_weight: f64,
    timing: bool,
) -> Result<RunReport, Error> {
    let n = graph.vertex_count();
    let seeds = bench::solve_run_seeds(seed, runs);
    match method {
        Method::Eo => {
            let tau = tau.unwrap_or(1.4);
            let max_updates = updates.unwrap_or(200 * n as u64);
            let outcome = best_of(&seeds, timing, |run_seed| {
                solve_partition_eo(
                    graph,
                    &EoConfig {
                        tau,
                        max_updates,
                        seed: run_seed,
                        selection,
                    },
                )
            })?;
            Ok(report(
                Problem::Partition,
                method,
                n,
                seed,
                format!(
                    "tau={tau};updates={max_updates};selection={};rng={}",
                    selection.as_str(),
                    RNG_ALGORITHM
                ),
                outcome,
                Solution::Sides,
            ))
        }
        Method::Sa => {
            let mut schedule = SaSchedule::partition_default(n, 0);
            schedule.t0 = t0;
            if let Some(c) = cooling {
                schedule.cooling = c;
            }
            if let Some(len) = stage_length {
                schedule.stage_length = len;
            }
            let echo = format!(
                "t0={};cooling={};stage_length={};imbalance_weight={imbalance_weight};rng={}",
                t0.map(|t| t.to_string()).unwrap_or_else(|| "auto".into()),
                schedule.cooling,
                schedule.stage_length,
                RNG_ALGORITHM
            );
            let outcome = best_of(&seeds, timing, |run_seed| {
                solve_partition_sa(graph, &schedule.with_seed(run_seed), imbalance_weight)
            })?;
            Ok(report(
                Problem::Partition,
                method,
                n,
                seed,
                echo,
                outcome,
                Solution::Sides,
            ))
        }
        Method::Exact => {
            let r = exact_partition(graph)?;
            Ok(exact_report(
                Problem::Partition,
                n,
                seed,
                "algorithm=enumeration".into(),
                r.optimum,
                Solution::Sides(r.witness),
                r.nodes_explored,
            ))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_tsp(
    inst: &TspInstance,
    method: Method,
    tau: Option<f64>,
    updates: Option<u64>,
    runs: usize,
    seed: u64,
    selection: SelectionMode,
    t0: Option<f64>,
    cooling: Option<f64>,
    stage_length: Option<u64>,
    timing: bool,
) -> Result<RunReport, Error> {
    let n = inst.n();
    let seeds = bench::solve_run_seeds(seed, runs);
    match method {
        Method::Eo => {
            let tau = tau.unwrap_or(match inst.kind() {
                TspKind::EuclideanTorus => 4.0,
                TspKind::RandomMatrix => 4.4,
            });
            let max_updates = updates.unwrap_or(16 * (n as u64) * (n as u64));
            let outcome = best_of(&seeds, timing, |run_seed| {
                solve_tsp_eo(
                    inst,
                    &EoConfig {
                        tau,
                        max_updates,
                        seed: run_seed,
                        selection,
                    },
                )
            })?;
            Ok(report(
                Problem::Tsp,
                method,
                n,
                seed,
                format!(
                    "tau={tau};updates={max_updates};selection={};rng={}",
                    selection.as_str(),
                    RNG_ALGORITHM
                ),
                outcome,
                Solution::Tour,
            ))
        }
        Method::Sa => {
            let mut schedule = SaSchedule::tsp_default(n, 0);
            schedule.t0 = t0;
            if let Some(c) = cooling {
                schedule.cooling = c;
            }
            if let Some(len) = stage_length {
                schedule.stage_length = len;
            }
            let echo = format!(
                "t0={};cooling={};stage_length={};rng={}",
                t0.map(|t| t.to_string()).unwrap_or_else(|| "auto".into()),
                schedule.cooling,
                schedule.stage_length,
                RNG_ALGORITHM
            );
            let outcome = best_of(&seeds, timing, |run_seed| {
                solve_tsp_sa(inst, &schedule.with_seed(run_seed))
            })?;
            Ok(report(Problem::Tsp, method, n, seed, echo, outcome, Solution::Tour))
        }
        Method::Exact => {
            let r = exact_tsp(inst)?;
            Ok(exact_report(
                Problem::Tsp,
                n,
                seed,
                "algorithm=held-karp".into(),
                r.optimum,
                Solution::Tour(r.witness),
                r.nodes_explored,
            ))
        }
    }
}

fn report<C>(
    problem: Problem,
    method: Method,
    n: usize,
    seed: u64,
    params: String,
    outcome: BestRuns<C>,
    wrap: impl Fn(C) -> Solution,
) -> RunReport {
    RunReport {
        problem,
        method,
        n,
        rng: RNG_ALGORITHM.to_string(),
        seed,
        params,
        runs: outcome.summaries,
        best_run: outcome.best_index,
        best_cost: outcome.best.best_cost,
        best_config: wrap(outcome.best.best_config),
        trace: outcome.best.trace,
    }
}

fn exact_report(
    problem: Problem,
    n: usize,
    seed: u64,
    params: String,
    optimum: f64,
    witness: Solution,
    nodes: u64,
) -> RunReport {
    RunReport {
        problem,
        method: Method::Exact,
        n,
        rng: RNG_ALGORITHM.to_string(),
        seed,
        params,
        runs: vec![RunSummary {
            run: 0,
            seed,
            best_cost: optimum,
            updates_used: nodes,
            wall_time_s: 0.0,
        }],
        best_run: 0,
        best_cost: optimum,
        best_config: witness,
        trace: Vec::<TraceBin>::new(),
    }
}
