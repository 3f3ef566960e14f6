//! Experiment harness: instance sweeps over (size, connectivity) or
//! (size, kind) grids with a best-of-k run protocol, deterministic seed
//! derivation, CSV persistence, the SA relative-error table and the
//! finite-size scaling fit.
//!
//! Seeds: every instance and every run gets its own seed derived by pure
//! integer mixing from the master seed and the cell coordinates. Instance
//! seeds do not involve the method, so every method sees the identical
//! instance; run seeds do, so methods draw independent streams.

use crate::error::{Error, Result};
use crate::exact::{exact_partition, exact_tsp};
use crate::graph::{generate_geometric, GeometricSpec, Graph};
use crate::partition::solve_partition_eo;
use crate::rank::{EoConfig, RunResult, SelectionMode, TraceBin, RNG_ALGORITHM};
use crate::sa::{solve_partition_sa, solve_tsp_sa, SaSchedule, DEFAULT_IMBALANCE_WEIGHT};
use crate::seeding;
use crate::tsp::{solve_tsp_eo, TspInstance, TspKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Problem {
    Partition,
    Tsp,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Partition => "partition",
            Problem::Tsp => "tsp",
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partition" => Ok(Problem::Partition),
            "tsp" => Ok(Problem::Tsp),
            other => Err(Error::invalid_arg(format!("unknown problem {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Eo,
    Sa,
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Eo => "eo",
            Method::Sa => "sa",
            Method::Exact => "exact",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eo" => Ok(Method::Eo),
            "sa" => Ok(Method::Sa),
            "exact" => Ok(Method::Exact),
            other => Err(Error::invalid_arg(format!("unknown method {other:?}"))),
        }
    }
}

/// A move/update budget that may scale with the instance size: `50000`,
/// `200N`, or `16N2` (meaning 16·n²).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateBudget {
    Absolute(u64),
    PerN(u64),
    PerN2(u64),
}

impl UpdateBudget {
    pub fn resolve(self, n: usize) -> u64 {
        match self {
            UpdateBudget::Absolute(v) => v,
            UpdateBudget::PerN(v) => v * n as u64,
            UpdateBudget::PerN2(v) => v * (n as u64) * (n as u64),
        }
    }
}

impl std::str::FromStr for UpdateBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let parse_coeff = |c: &str, what: &str| -> Result<u64> {
            c.parse()
                .map_err(|_| Error::invalid_arg(format!("invalid {what} budget {t:?}")))
        };
        if let Some(c) = t
            .strip_suffix("N2")
            .or_else(|| t.strip_suffix("n2"))
            .or_else(|| t.strip_suffix("N^2"))
            .or_else(|| t.strip_suffix("n^2"))
        {
            Ok(UpdateBudget::PerN2(parse_coeff(c, "per-n²")?))
        } else if let Some(c) = t.strip_suffix(['N', 'n']) {
            Ok(UpdateBudget::PerN(parse_coeff(c, "per-n")?))
        } else {
            Ok(UpdateBudget::Absolute(parse_coeff(t, "absolute")?))
        }
    }
}

/// EO parameter block of a plan. Unset fields fall back to the problem
/// defaults: τ = 1.4 (partition), 4.0 (Euclidean TSP), 4.4 (random-matrix
/// TSP); budget 200N updates (partition), 16N² (TSP).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EoParams {
    pub tau: Option<f64>,
    pub updates: Option<UpdateBudget>,
    pub selection: SelectionMode,
}

impl Default for EoParams {
    fn default() -> Self {
        EoParams {
            tau: None,
            updates: None,
            selection: SelectionMode::ExactRank,
        }
    }
}

impl EoParams {
    pub fn resolved_tau(&self, problem: Problem, kind: Option<TspKind>) -> f64 {
        self.tau.unwrap_or(match problem {
            Problem::Partition => 1.4,
            Problem::Tsp => match kind {
                Some(TspKind::RandomMatrix) => 4.4,
                _ => 4.0,
            },
        })
    }

    pub fn resolved_updates(&self, problem: Problem, n: usize) -> u64 {
        self.updates
            .unwrap_or(match problem {
                Problem::Partition => UpdateBudget::PerN(200),
                Problem::Tsp => UpdateBudget::PerN2(16),
            })
            .resolve(n)
    }
}

/// SA parameter block of a plan. Unset fields fall back to the problem
/// defaults of [`SaSchedule::partition_default`] / [`SaSchedule::tsp_default`];
/// `stage_multiplier` stretches the temperature length (the 4x-longer
/// protocol variant).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SaParams {
    pub t0: Option<f64>,
    pub cooling: Option<f64>,
    pub stage_length: Option<UpdateBudget>,
    pub stage_multiplier: u64,
    pub imbalance_weight: f64,
    pub freeze_stages: u32,
    pub min_accept: f64,
    pub move_budget: Option<UpdateBudget>,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            t0: None,
            cooling: None,
            stage_length: None,
            stage_multiplier: 1,
            imbalance_weight: DEFAULT_IMBALANCE_WEIGHT,
            freeze_stages: 5,
            min_accept: 0.02,
            move_budget: None,
        }
    }
}

impl SaParams {
    pub fn schedule(&self, problem: Problem, n: usize, seed: u64) -> SaSchedule {
        let mut s = match problem {
            Problem::Partition => SaSchedule::partition_default(n, seed),
            Problem::Tsp => SaSchedule::tsp_default(n, seed),
        };
        if let Some(t0) = self.t0 {
            s.t0 = Some(t0);
        }
        if let Some(c) = self.cooling {
            s.cooling = c;
        }
        if let Some(len) = self.stage_length {
            s.stage_length = len.resolve(n);
        }
        s.stage_length *= self.stage_multiplier.max(1);
        s.freeze_stages = self.freeze_stages;
        s.min_accept = self.min_accept;
        s.move_budget = self.move_budget.map(|b| b.resolve(n));
        s
    }
}

/// Full experiment grid: every method runs on the identical instances at
/// every (size, α) or (size, kind) point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub problem: Problem,
    pub sizes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub kinds: Vec<TspKind>,
    pub instances_per_point: usize,
    pub runs_per_instance: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub eo: EoParams,
    pub sa: SaParams,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::invalid_arg("plan lists no sizes"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid_arg("plan lists no methods"));
        }
        if self.instances_per_point == 0 || self.runs_per_instance == 0 {
            return Err(Error::invalid_arg(
                "instances and runs per point must be at least 1",
            ));
        }
        match self.problem {
            Problem::Partition => {
                if self.alphas.is_empty() {
                    return Err(Error::invalid_arg("partition plan lists no alphas"));
                }
            }
            Problem::Tsp => {
                if self.kinds.is_empty() {
                    return Err(Error::invalid_arg("tsp plan lists no kinds"));
                }
            }
        }
        Ok(())
    }

    /// Seed that generates instance `idx` of the grid point; independent of
    /// any method.
    pub fn instance_seed(&self, n: usize, point: PointKey, idx: usize) -> u64 {
        let mut h = seeding::mix_str(self.master_seed, "instance");
        h = seeding::mix_str(h, self.problem.as_str());
        h = seeding::mix(h, n as u64);
        h = match point {
            PointKey::Alpha(a) => seeding::mix_f64(h, a),
            PointKey::Kind(k) => seeding::mix_str(h, k.as_str()),
        };
        seeding::mix(h, idx as u64)
    }

    /// Seed of run `run` of `method` on instance `idx`.
    pub fn run_seed(&self, method: Method, n: usize, point: PointKey, idx: usize, run: usize) -> u64 {
        let mut h = seeding::mix_str(self.master_seed, "run");
        h = seeding::mix_str(h, method.as_str());
        h = seeding::mix_str(h, self.problem.as_str());
        h = seeding::mix(h, n as u64);
        h = match point {
            PointKey::Alpha(a) => seeding::mix_f64(h, a),
            PointKey::Kind(k) => seeding::mix_str(h, k.as_str()),
        };
        h = seeding::mix(h, idx as u64);
        seeding::mix(h, run as u64)
    }
}

/// Second grid coordinate: mean connectivity (partition) or instance kind
/// (TSP).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointKey {
    Alpha(f64),
    Kind(TspKind),
}

/// Parses the line-based `key = value` plan format. Lists are
/// comma-separated; `#` starts a comment.
///
/// Keys: `problem`, `sizes`, `alphas`, `kinds`, `instances`, `runs`,
/// `methods`, `master_seed`, `eo.tau`, `eo.updates`, `eo.selection`,
/// `sa.t0`, `sa.cooling`, `sa.stage_length`, `sa.stage_multiplier`,
/// `sa.imbalance_weight`, `sa.freeze_stages`, `sa.min_accept`,
/// `sa.move_budget`.
pub fn parse_plan(text: &str) -> Result<ExperimentPlan> {
    let mut problem = None;
    let mut sizes = Vec::new();
    let mut alphas = Vec::new();
    let mut kinds = Vec::new();
    let mut instances_per_point = 1usize;
    let mut runs_per_instance = 1usize;
    let mut methods = Vec::new();
    let mut master_seed = 0u64;
    let mut eo = EoParams::default();
    let mut sa = SaParams::default();

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::parse(line_no, format!("invalid {what}: {value:?}"));

        match key {
            "problem" => problem = Some(value.parse().map_err(|_| bad("problem"))?),
            "sizes" => {
                sizes = split_list(value)
                    .map(|t| t.parse::<usize>().map_err(|_| bad("size")))
                    .collect::<Result<_>>()?
            }
            "alphas" => {
                alphas = split_list(value)
                    .map(|t| t.parse::<f64>().map_err(|_| bad("alpha")))
                    .collect::<Result<_>>()?
            }
            "kinds" => {
                kinds = split_list(value)
                    .map(|t| t.parse::<TspKind>().map_err(|_| bad("kind")))
                    .collect::<Result<_>>()?
            }
            "instances" => instances_per_point = value.parse().map_err(|_| bad("instances"))?,
            "runs" => runs_per_instance = value.parse().map_err(|_| bad("runs"))?,
            "methods" => {
                methods = split_list(value)
                    .map(|t| t.parse::<Method>().map_err(|_| bad("method")))
                    .collect::<Result<_>>()?
            }
            "master_seed" => master_seed = value.parse().map_err(|_| bad("master_seed"))?,
            "eo.tau" => eo.tau = Some(value.parse().map_err(|_| bad("eo.tau"))?),
            "eo.updates" => eo.updates = Some(value.parse().map_err(|_| bad("eo.updates"))?),
            "eo.selection" => eo.selection = value.parse().map_err(|_| bad("eo.selection"))?,
            "sa.t0" => {
                sa.t0 = if value == "auto" {
                    None
                } else {
                    Some(value.parse().map_err(|_| bad("sa.t0"))?)
                }
            }
            "sa.cooling" => sa.cooling = Some(value.parse().map_err(|_| bad("sa.cooling"))?),
            "sa.stage_length" => {
                sa.stage_length = Some(value.parse().map_err(|_| bad("sa.stage_length"))?)
            }
            "sa.stage_multiplier" => {
                sa.stage_multiplier = value.parse().map_err(|_| bad("sa.stage_multiplier"))?
            }
            "sa.imbalance_weight" => {
                sa.imbalance_weight = value.parse().map_err(|_| bad("sa.imbalance_weight"))?
            }
            "sa.freeze_stages" => {
                sa.freeze_stages = value.parse().map_err(|_| bad("sa.freeze_stages"))?
            }
            "sa.min_accept" => sa.min_accept = value.parse().map_err(|_| bad("sa.min_accept"))?,
            "sa.move_budget" => {
                sa.move_budget = Some(value.parse().map_err(|_| bad("sa.move_budget"))?)
            }
            other => {
                return Err(Error::parse(line_no, format!("unknown plan key {other:?}")));
            }
        }
    }

    let plan = ExperimentPlan {
        problem: problem
            .ok_or_else(|| Error::invalid_arg("plan is missing the `problem` key"))?,
        sizes,
        alphas,
        kinds,
        instances_per_point,
        runs_per_instance,
        methods,
        master_seed,
        eo,
        sa,
    };
    plan.validate()?;
    Ok(plan)
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|t| !t.is_empty())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordStatus {
    Ok,
    Capacity,
}

/// One harness cell: the best-of-runs outcome of one method on one
/// instance. Cost fields are quantized to 6 significant digits at
/// construction so that CSV round-trips are exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub problem: Problem,
    pub method: Method,
    pub n: usize,
    pub alpha: Option<f64>,
    pub kind: Option<TspKind>,
    pub instance: usize,
    pub status: RecordStatus,
    /// Minimum cost over the runs; `None` on capacity errors.
    pub best: Option<f64>,
    /// Mean over the runs' best costs.
    pub mean: Option<f64>,
    pub wall_time_s: f64,
    pub instance_seed: u64,
    pub run_seed0: u64,
    pub params: String,
}

/// Quantizes to 6 significant decimal digits (the CSV precision).
pub fn quantize_sig6(x: f64) -> f64 {
    format_sig6(x).parse().expect("own format is parseable")
}

/// Formats with exactly 6 significant digits, plain decimal for moderate
/// exponents and scientific otherwise. `.` decimal separator, ASCII.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("{:.5e} always has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..=8).contains(&exp) {
        return sci;
    }
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 6);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let point = exp as usize + 1;
        if point >= 6 {
            out.push_str(&digits);
            for _ in 0..(point - 6) {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    out
}

pub const CSV_HEADER: &str =
    "problem,method,n,alpha,kind,instance,status,best,mean,wall_time_s,instance_seed,run_seed0,params";

/// Serializes records to the CSV schema; fixed 6-significant-digit floats,
/// LF endings.
pub fn records_to_csv(records: &[ResultRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 80 + 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        debug_assert!(!r.params.contains(','));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.problem.as_str(),
            r.method.as_str(),
            r.n,
            r.alpha.map(format_sig6).unwrap_or_default(),
            r.kind.map(|k| k.as_str().to_string()).unwrap_or_default(),
            r.instance,
            match r.status {
                RecordStatus::Ok => "ok",
                RecordStatus::Capacity => "capacity",
            },
            r.best.map(format_sig6).unwrap_or_default(),
            r.mean.map(format_sig6).unwrap_or_default(),
            format_sig6(r.wall_time_s),
            r.instance_seed,
            r.run_seed0,
            r.params,
        );
    }
    out
}

pub fn write_records_csv(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, records_to_csv(records))?;
    Ok(())
}

pub fn parse_records_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty CSV"))?;
    if header != CSV_HEADER {
        return Err(Error::parse(1, format!("unexpected CSV header {header:?}")));
    }
    let mut records = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(Error::parse(
                line_no,
                format!("expected 13 fields, found {}", fields.len()),
            ));
        }
        let opt_f64 = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::parse(line_no, format!("invalid {what}: {s:?}")))
            }
        };
        records.push(ResultRecord {
            problem: fields[0]
                .parse()
                .map_err(|_| Error::parse(line_no, "invalid problem"))?,
            method: fields[1]
                .parse()
                .map_err(|_| Error::parse(line_no, "invalid method"))?,
            n: fields[2]
                .parse()
                .map_err(|_| Error::parse(line_no, "invalid n"))?,
            alpha: opt_f64(fields[3], "alpha")?,
            kind: if fields[4].is_empty() {
                None
            } else {
                Some(
                    fields[4]
                        .parse()
                        .map_err(|_| Error::parse(line_no, "invalid kind"))?,
                )
            },
            instance: fields[5]
                .parse()
                .map_err(|_| Error::parse(line_no, "invalid instance"))?,
            status: match fields[6] {
                "ok" => RecordStatus::Ok,
                "capacity" => RecordStatus::Capacity,
                other => {
                    return Err(Error::parse(line_no, format!("invalid status {other:?}")))
                }
            },
            best: opt_f64(fields[7], "best")?,
            mean: opt_f64(fields[8], "mean")?,
            wall_time_s: fields[9]
                .parse()
                .map_err(|_| Error::parse(line_no, "invalid wall_time_s"))?,
            instance_seed: fields[10]
                .parse()
                .map_err(|_| Error::parse(line_no, "invalid instance_seed"))?,
            run_seed0: fields[11]
                .parse()
                .map_err(|_| Error::parse(line_no, "invalid run_seed0"))?,
            params: fields[12].to_string(),
        });
    }
    Ok(records)
}

fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| {
        (a.problem, a.method, a.n)
            .cmp(&(b.problem, b.method, b.n))
            .then_with(|| {
                a.alpha
                    .unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&b.alpha.unwrap_or(f64::NEG_INFINITY))
            })
            .then_with(|| {
                a.kind
                    .map(|k| k.as_str())
                    .cmp(&b.kind.map(|k| k.as_str()))
            })
            .then_with(|| a.instance.cmp(&b.instance))
    });
}

/// Executes the full plan grid. Each instance is generated once from its
/// derived seed and every method runs on it; per-instance best and mean
/// over the runs land in one record. Capacity errors from the exact oracle
/// become `status = capacity` records instead of failing the plan.
///
/// Wall times are measured only when `timing` is set; the default keeps
/// reruns byte-identical.
pub fn run_plan(plan: &ExperimentPlan, timing: bool) -> Result<Vec<ResultRecord>> {
    plan.validate()?;
    let points: Vec<PointKey> = match plan.problem {
        Problem::Partition => plan.alphas.iter().map(|&a| PointKey::Alpha(a)).collect(),
        Problem::Tsp => plan.kinds.iter().map(|&k| PointKey::Kind(k)).collect(),
    };

    let mut records = Vec::new();
    for &n in &plan.sizes {
        for &point in &points {
            for idx in 0..plan.instances_per_point {
                let instance_seed = plan.instance_seed(n, point, idx);
                let cell = match plan.problem {
                    Problem::Partition => {
                        let PointKey::Alpha(alpha) = point else { unreachable!() };
                        let graph =
                            generate_geometric(&GeometricSpec::new(n, alpha, instance_seed))?;
                        CellInstance::Graph(graph)
                    }
                    Problem::Tsp => {
                        let PointKey::Kind(kind) = point else { unreachable!() };
                        let inst = match kind {
                            TspKind::EuclideanTorus => TspInstance::euclidean_torus(n, instance_seed)?,
                            TspKind::RandomMatrix => TspInstance::random_matrix(n, instance_seed)?,
                        };
                        CellInstance::Tsp(inst)
                    }
                };
                for &method in &plan.methods {
                    records.push(run_cell(
                        plan,
                        &cell,
                        method,
                        n,
                        point,
                        idx,
                        instance_seed,
                        timing,
                    )?);
                }
            }
        }
    }
    sort_records(&mut records);
    Ok(records)
}

enum CellInstance {
    Graph(Graph),
    Tsp(TspInstance),
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    plan: &ExperimentPlan,
    cell: &CellInstance,
    method: Method,
    n: usize,
    point: PointKey,
    idx: usize,
    instance_seed: u64,
    timing: bool,
) -> Result<ResultRecord> {
    let (alpha, kind) = match point {
        PointKey::Alpha(a) => (Some(a), None),
        PointKey::Kind(k) => (None, Some(k)),
    };
    let run_seed0 = plan.run_seed(method, n, point, idx, 0);
    let started = Instant::now();

    let outcome: Result<(Vec<f64>, String)> = match (method, cell) {
        (Method::Eo, CellInstance::Graph(graph)) => {
            let tau = plan.eo.resolved_tau(plan.problem, kind);
            let updates = plan.eo.resolved_updates(plan.problem, n);
            let mut costs = Vec::with_capacity(plan.runs_per_instance);
            for run in 0..plan.runs_per_instance {
                let cfg = EoConfig {
                    tau,
                    max_updates: updates,
                    seed: plan.run_seed(method, n, point, idx, run),
                    selection: plan.eo.selection,
                };
                costs.push(solve_partition_eo(graph, &cfg)?.best_cost);
            }
            Ok((
                costs,
                format!(
                    "tau={tau};updates={updates};selection={};runs={};rng={}",
                    plan.eo.selection.as_str(),
                    plan.runs_per_instance,
                    RNG_ALGORITHM
                ),
            ))
        }
        (Method::Eo, CellInstance::Tsp(inst)) => {
            let tau = plan.eo.resolved_tau(plan.problem, kind);
            let updates = plan.eo.resolved_updates(plan.problem, n);
            let mut costs = Vec::with_capacity(plan.runs_per_instance);
            for run in 0..plan.runs_per_instance {
                let cfg = EoConfig {
                    tau,
                    max_updates: updates,
                    seed: plan.run_seed(method, n, point, idx, run),
                    selection: plan.eo.selection,
                };
                costs.push(solve_tsp_eo(inst, &cfg)?.best_cost);
            }
            Ok((
                costs,
                format!(
                    "tau={tau};updates={updates};selection={};runs={};rng={}",
                    plan.eo.selection.as_str(),
                    plan.runs_per_instance,
                    RNG_ALGORITHM
                ),
            ))
        }
        (Method::Sa, CellInstance::Graph(graph)) => {
            let mut costs = Vec::with_capacity(plan.runs_per_instance);
            let mut echo = String::new();
            for run in 0..plan.runs_per_instance {
                let seed = plan.run_seed(method, n, point, idx, run);
                let schedule = plan.sa.schedule(plan.problem, n, seed);
                if run == 0 {
                    echo = sa_echo(&schedule, Some(plan.sa.imbalance_weight), plan.runs_per_instance);
                }
                costs.push(
                    solve_partition_sa(graph, &schedule, plan.sa.imbalance_weight)?.best_cost,
                );
            }
            Ok((costs, echo))
        }
        (Method::Sa, CellInstance::Tsp(inst)) => {
            let mut costs = Vec::with_capacity(plan.runs_per_instance);
            let mut echo = String::new();
            for run in 0..plan.runs_per_instance {
                let seed = plan.run_seed(method, n, point, idx, run);
                let schedule = plan.sa.schedule(plan.problem, n, seed);
                if run == 0 {
                    echo = sa_echo(&schedule, None, plan.runs_per_instance);
                }
                costs.push(solve_tsp_sa(inst, &schedule)?.best_cost);
            }
            Ok((costs, echo))
        }
        (Method::Exact, CellInstance::Graph(graph)) => {
            exact_partition(graph).map(|r| (vec![r.optimum], "algorithm=enumeration".to_string()))
        }
        (Method::Exact, CellInstance::Tsp(inst)) => {
            exact_tsp(inst).map(|r| (vec![r.optimum], "algorithm=held-karp".to_string()))
        }
    };

    let wall = if timing {
        quantize_sig6(started.elapsed().as_secs_f64())
    } else {
        0.0
    };

    match outcome {
        Ok((costs, params)) => {
            let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = costs.iter().sum::<f64>() / costs.len() as f64;
            Ok(ResultRecord {
                problem: plan.problem,
                method,
                n,
                alpha: alpha.map(quantize_sig6),
                kind,
                instance: idx,
                status: RecordStatus::Ok,
                best: Some(quantize_sig6(best)),
                mean: Some(quantize_sig6(mean)),
                wall_time_s: wall,
                instance_seed,
                run_seed0,
                params,
            })
        }
        Err(Error::Capacity(msg)) => Ok(ResultRecord {
            problem: plan.problem,
            method,
            n,
            alpha: alpha.map(quantize_sig6),
            kind,
            instance: idx,
            status: RecordStatus::Capacity,
            best: None,
            mean: None,
            wall_time_s: wall,
            instance_seed,
            run_seed0,
            params: msg.replace(',', ";"),
        }),
        Err(e) => Err(e),
    }
}

fn sa_echo(schedule: &SaSchedule, imbalance_weight: Option<f64>, runs: usize) -> String {
    let mut s = format!(
        "t0={};cooling={};stage_length={};freeze={};min_accept={};budget={}",
        schedule
            .t0
            .map(|t| t.to_string())
            .unwrap_or_else(|| "auto".to_string()),
        schedule.cooling,
        schedule.stage_length,
        schedule.freeze_stages,
        schedule.min_accept,
        schedule.budget(),
    );
    if let Some(w) = imbalance_weight {
        let _ = write!(s, ";imbalance_weight={w}");
    }
    let _ = write!(s, ";runs={runs};rng={RNG_ALGORITHM}");
    s
}

/// One row of the SA relative-error table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaErrorRow {
    pub n: usize,
    pub alpha: f64,
    pub error: f64,
}

/// SA's error relative to the best result found by either method:
/// mean over instances of (SA_best − min_best) / max(min_best, 1).
pub fn sa_relative_error(records: &[ResultRecord]) -> Result<Vec<SaErrorRow>> {
    let mut rows = Vec::new();
    let mut points = BTreeSet::new();
    for r in records {
        if r.problem == Problem::Partition && r.status == RecordStatus::Ok {
            if let Some(alpha) = r.alpha {
                points.insert((r.n, alpha.to_bits()));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::invalid_arg(
            "no partition records with an alpha value",
        ));
    }
    for (n, alpha_bits) in points {
        let alpha = f64::from_bits(alpha_bits);
        let lookup = |method: Method, instance: usize| -> Option<f64> {
            records
                .iter()
                .find(|r| {
                    r.problem == Problem::Partition
                        && r.method == method
                        && r.n == n
                        && r.alpha.map(f64::to_bits) == Some(alpha_bits)
                        && r.instance == instance
                        && r.status == RecordStatus::Ok
                })
                .and_then(|r| r.best)
        };
        let instances: BTreeSet<usize> = records
            .iter()
            .filter(|r| {
                r.problem == Problem::Partition
                    && r.n == n
                    && r.alpha.map(f64::to_bits) == Some(alpha_bits)
            })
            .map(|r| r.instance)
            .collect();
        let mut errors = Vec::new();
        for idx in instances {
            let (Some(eo), Some(sa)) = (lookup(Method::Eo, idx), lookup(Method::Sa, idx)) else {
                return Err(Error::invalid_arg(format!(
                    "instance {idx} at (n={n}, alpha={alpha}) lacks an EO/SA pair"
                )));
            };
            let reference = eo.min(sa);
            errors.push((sa - reference) / reference.max(1.0));
        }
        rows.push(SaErrorRow {
            n,
            alpha,
            error: errors.iter().sum::<f64>() / errors.len() as f64,
        });
    }
    Ok(rows)
}

pub fn sa_error_to_csv(rows: &[SaErrorRow]) -> String {
    let mut out = String::from("n,alpha,error\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            row.n,
            format_sig6(row.alpha),
            format_sig6(row.error)
        );
    }
    out
}

/// Finite-size scaling fit of mean best cutsizes to
/// ⟨m⟩ = C · N^ν · (α − α₀)^β with ν held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub nu: f64,
    pub alpha0: f64,
    pub beta: f64,
    /// Fitted prefactor C.
    pub amplitude: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
}

/// Collapses the EO records onto log(⟨m⟩/N^ν) = log C + β·log(α − α₀) and
/// fits (α₀, β, C) by golden-section search on α₀ with closed-form linear
/// regression per candidate.
pub fn fit_scaling(records: &[ResultRecord], nu: f64) -> Result<ScalingFit> {
    let points = scaling_points(records, nu)?;
    fit_scaling_points(&points, nu)
}

/// Three-parameter variant: golden-section on ν as well, for exploration.
pub fn fit_scaling_free_nu(records: &[ResultRecord]) -> Result<ScalingFit> {
    let objective = |nu: f64| -> f64 {
        scaling_points(records, nu)
            .and_then(|p| fit_scaling_points(&p, nu))
            .map(|f| f.residual)
            .unwrap_or(f64::INFINITY)
    };
    let nu = golden_min(objective, 0.0, 1.5, 120);
    let points = scaling_points(records, nu)?;
    fit_scaling_points(&points, nu)
}

/// (n, α, ⟨best⟩) aggregation of the EO partition records.
fn scaling_points(records: &[ResultRecord], nu: f64) -> Result<Vec<(usize, f64, f64)>> {
    if !nu.is_finite() {
        return Err(Error::invalid_arg("nu must be finite"));
    }
    let mut keys = BTreeSet::new();
    for r in records {
        if r.problem == Problem::Partition && r.method == Method::Eo && r.status == RecordStatus::Ok
        {
            if let Some(alpha) = r.alpha {
                keys.insert((r.n, alpha.to_bits()));
            }
        }
    }
    let mut points = Vec::new();
    for (n, alpha_bits) in keys {
        let alpha = f64::from_bits(alpha_bits);
        let bests: Vec<f64> = records
            .iter()
            .filter(|r| {
                r.problem == Problem::Partition
                    && r.method == Method::Eo
                    && r.status == RecordStatus::Ok
                    && r.n == n
                    && r.alpha.map(f64::to_bits) == Some(alpha_bits)
            })
            .filter_map(|r| r.best)
            .collect();
        let mean = bests.iter().sum::<f64>() / bests.len() as f64;
        if mean > 0.0 {
            points.push((n, alpha, mean));
        }
    }
    let sizes: BTreeSet<usize> = points.iter().map(|p| p.0).collect();
    let alphas: BTreeSet<u64> = points.iter().map(|p| p.1.to_bits()).collect();
    if sizes.len() < 2 || alphas.len() < 4 {
        return Err(Error::FitFailure(format!(
            "scaling fit needs >= 2 sizes and >= 4 alphas with positive mean cutsize, found {} and {}",
            sizes.len(),
            alphas.len()
        )));
    }
    Ok(points)
}

fn fit_scaling_points(points: &[(usize, f64, f64)], nu: f64) -> Result<ScalingFit> {
    let alpha_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let lo = alpha_min - 8.0;
    let hi = alpha_min - 1e-6;

    let residual_of = |alpha0: f64| -> f64 {
        match regress(points, nu, alpha0) {
            Some((_, _, ssr)) => ssr,
            None => f64::INFINITY,
        }
    };

    // Coarse bracket, then golden-section inside it.
    let grid = 64;
    let mut best_k = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..=grid {
        let a0 = lo + (hi - lo) * k as f64 / grid as f64;
        let v = residual_of(a0);
        if v < best_val {
            best_val = v;
            best_k = k;
        }
    }
    if !best_val.is_finite() {
        return Err(Error::FitFailure(
            "no admissible alpha0 candidate".to_string(),
        ));
    }
    let step = (hi - lo) / grid as f64;
    let bracket_lo = (lo + step * (best_k as f64 - 1.0)).max(lo);
    let bracket_hi = (lo + step * (best_k as f64 + 1.0)).min(hi);
    let alpha0 = golden_min(residual_of, bracket_lo, bracket_hi, 200);

    let (beta, intercept, residual) = regress(points, nu, alpha0)
        .ok_or_else(|| Error::FitFailure("no admissible alpha0 candidate".to_string()))?;
    Ok(ScalingFit {
        nu,
        alpha0,
        beta,
        amplitude: intercept.exp(),
        residual,
    })
}

/// Least-squares line through (log(α−α₀), log(m/N^ν)); None when a point
/// has α ≤ α₀.
fn regress(points: &[(usize, f64, f64)], nu: f64, alpha0: f64) -> Option<(f64, f64, f64)> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, alpha, mean) in points {
        if alpha <= alpha0 {
            return None;
        }
        xs.push((alpha - alpha0).ln());
        ys.push((mean / (n as f64).powf(nu)).ln());
    }
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return None;
    }
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let e = y - intercept - beta * x;
            e * e
        })
        .sum();
    Some((beta, intercept, ssr))
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Writes a run trace as `bin,min_cost,max_cost,best_so_far` CSV;
/// `best_so_far` is the running minimum of the bin minima.
pub fn trace_to_csv(trace: &[TraceBin]) -> String {
    let mut out = String::from("bin,min_cost,max_cost,best_so_far\n");
    let mut best = f64::INFINITY;
    for bin in trace {
        best = best.min(bin.min_cost);
        let _ = writeln!(
            out,
            "{},{},{},{}",
            bin.bin,
            format_sig6(bin.min_cost),
            format_sig6(bin.max_cost),
            format_sig6(best)
        );
    }
    out
}

pub fn export_trace<C>(run: &RunResult<C>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, trace_to_csv(&run.trace))?;
    Ok(())
}

/// Best configuration in a persisted run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Solution {
    /// Partition side labels.
    Sides(Vec<u8>),
    /// Tour city order.
    Tour(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub best_cost: f64,
    pub updates_used: u64,
    pub wall_time_s: f64,
}

/// JSON-persisted outcome of a `solve` invocation: per-run summaries plus
/// the full best run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: Problem,
    pub method: Method,
    pub n: usize,
    pub rng: String,
    pub seed: u64,
    pub params: String,
    pub runs: Vec<RunSummary>,
    pub best_run: usize,
    pub best_cost: f64,
    pub best_config: Solution,
    pub trace: Vec<TraceBin>,
}

pub fn write_run_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    fs::write(path, json)?;
    Ok(())
}

pub fn read_run_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Seeds for a best-of-k protocol outside a plan grid (the CLI `solve`
/// path).
pub fn solve_run_seeds(base_seed: u64, runs: usize) -> Vec<u64> {
    let h = seeding::mix_str(base_seed, "run");
    (0..runs).map(|k| seeding::mix(h, k as u64)).collect()
}
