//! Batch experiments: a JSON plan expands to an ordered list of cells
//! (method × sweep point × seed); each cell yields one CSV row, and rows are
//! grouped by sweep point into an aggregate file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use netalloc::bounds::{theorem1_bound, theorem2_bound, theorem3_bound, BoundQuery};
use netalloc::network::NetworkSpec;
use netalloc::two_stage::{mc_evaluate, Allocation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{check_network, read_allocation, read_json, read_network, resolve};
use crate::solver::{elapsed_ms, run_method, true_value, Method, SolveParams, TrueEval};

/// Seeds given as an explicit list or as a count `c` meaning `0..c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Count(u64),
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::List(vec![0])
    }
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Count(c) => (0..*c).collect(),
        }
    }
}

/// One method or several, run in the listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Methods {
    One(Method),
    Many(Vec<Method>),
}

impl Methods {
    pub fn to_vec(&self) -> Vec<Method> {
        match self {
            Methods::One(m) => vec![*m],
            Methods::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sweep {
    /// Sample sizes for `saa` and `evaluate`.
    pub n: Vec<usize>,
    /// Candidate counts for `subselect`.
    pub k: Vec<usize>,
    pub n1: Vec<usize>,
    /// Evaluation sample sizes; empty means `2·n1`.
    pub n2: Vec<usize>,
}

fn default_true() -> bool {
    true
}

/// An experiment plan. Relative paths are resolved against the plan file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub network_path: PathBuf,
    pub method: Methods,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub seeds: Seeds,
    pub output_path: PathBuf,
    /// Defaults to `<output stem>_aggregate.csv` next to the output.
    #[serde(default)]
    pub aggregate_path: Option<PathBuf>,
    #[serde(default)]
    pub true_eval: TrueEval,
    /// Allocation scored by the `evaluate` method.
    #[serde(default)]
    pub allocation_path: Option<PathBuf>,
    /// Query for the `bounds` method.
    #[serde(default)]
    pub bounds: Option<BoundQuery>,
    /// When false every `wall_time_ms` cell is 0, making output byte-stable.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    /// Run independent cells concurrently; row order is unaffected.
    #[serde(default = "default_true")]
    pub parallel: bool,
}

/// One row of the per-run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub method: String,
    pub n: Option<usize>,
    pub k_candidates: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub seed: Option<u64>,
    pub objective: f64,
    pub true_objective: Option<f64>,
    pub std_error: Option<f64>,
    pub n_distinct_scenarios: Option<usize>,
    pub wall_time_ms: f64,
}

pub const RUN_HEADER: [&str; 11] = [
    "method",
    "n",
    "k_candidates",
    "n1",
    "n2",
    "seed",
    "objective",
    "true_objective",
    "std_error",
    "n_distinct_scenarios",
    "wall_time_ms",
];

/// Statistics over the seeds of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub n: Option<usize>,
    pub k_candidates: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub runs: usize,
    pub objective_mean: f64,
    pub objective_min: f64,
    pub objective_max: f64,
    pub true_objective_mean: Option<f64>,
    pub true_objective_min: Option<f64>,
    pub true_objective_max: Option<f64>,
    /// Standard error of `true_objective_mean` across seeds.
    pub true_objective_se: Option<f64>,
    pub wall_time_ms_mean: f64,
}

#[derive(Debug, Clone)]
struct Cell {
    method: Method,
    n: Option<usize>,
    k: Option<usize>,
    n1: Option<usize>,
    n2: Option<usize>,
    seed: Option<u64>,
}

impl ExperimentPlan {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        read_json(path)
    }

    pub fn validate(&self) -> CliResult<()> {
        let methods = self.method.to_vec();
        if methods.is_empty() {
            return Err(CliError::domain("plan lists no methods"));
        }
        let seeds = self.seeds.to_vec();
        if seeds.is_empty() {
            return Err(CliError::domain("plan lists no seeds"));
        }
        let mut seen = HashSet::new();
        if let Some(s) = seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(CliError::domain(format!("seed {s} is listed twice")));
        }
        let nonempty = |v: &[usize], name: &str, m: Method| {
            if v.is_empty() || v.contains(&0) {
                Err(CliError::domain(format!(
                    "method {} needs a non-empty sweep.{name} of positive sizes",
                    m.name()
                )))
            } else {
                Ok(())
            }
        };
        for m in methods {
            match m {
                Method::Saa => nonempty(&self.sweep.n, "n", m)?,
                Method::Evaluate => {
                    nonempty(&self.sweep.n, "n", m)?;
                    if self.allocation_path.is_none() {
                        return Err(CliError::domain("method evaluate needs allocation_path"));
                    }
                }
                Method::Subselect => {
                    nonempty(&self.sweep.k, "k", m)?;
                    nonempty(&self.sweep.n1, "n1", m)?;
                    if self.sweep.n2.contains(&0) {
                        return Err(CliError::domain("sweep.n2 sizes must be positive"));
                    }
                }
                Method::Bounds => {
                    if self.bounds.is_none() {
                        return Err(CliError::domain("method bounds needs a bounds query"));
                    }
                }
                Method::Exact | Method::Deterministic | Method::Mean => {}
            }
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let seeds = self.seeds.to_vec();
        let mut cells = Vec::new();
        let blank = |method| Cell {
            method,
            n: None,
            k: None,
            n1: None,
            n2: None,
            seed: None,
        };
        for m in self.method.to_vec() {
            match m {
                Method::Exact | Method::Deterministic | Method::Mean | Method::Bounds => cells.push(blank(m)),
                Method::Saa | Method::Evaluate => {
                    for &n in &self.sweep.n {
                        for &seed in &seeds {
                            cells.push(Cell {
                                n: Some(n),
                                seed: Some(seed),
                                ..blank(m)
                            });
                        }
                    }
                }
                Method::Subselect => {
                    for &k in &self.sweep.k {
                        for &n1 in &self.sweep.n1 {
                            let n2s = if self.sweep.n2.is_empty() {
                                vec![2 * n1]
                            } else {
                                self.sweep.n2.clone()
                            };
                            for n2 in n2s {
                                for &seed in &seeds {
                                    cells.push(Cell {
                                        k: Some(k),
                                        n1: Some(n1),
                                        n2: Some(n2),
                                        seed: Some(seed),
                                        ..blank(m)
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

/// A plan with its paths resolved and inputs loaded.
pub struct LoadedPlan {
    pub plan: ExperimentPlan,
    pub net: NetworkSpec,
    pub allocation: Option<Allocation>,
    pub output_path: PathBuf,
    pub aggregate_path: PathBuf,
}

pub fn load_plan(path: &Path) -> CliResult<LoadedPlan> {
    let plan = ExperimentPlan::from_file(path)?;
    plan.validate()?;
    let base = path.parent().unwrap_or(Path::new("."));
    let net = read_network(&resolve(base, &plan.network_path))?;
    check_network(&net)?;
    let allocation = match &plan.allocation_path {
        Some(p) => Some(read_allocation(&resolve(base, p))?),
        None => None,
    };
    let output_path = resolve(base, &plan.output_path);
    let aggregate_path = match &plan.aggregate_path {
        Some(p) => resolve(base, p),
        None => default_aggregate_path(&output_path),
    };
    Ok(LoadedPlan {
        plan,
        net,
        allocation,
        output_path,
        aggregate_path,
    })
}

pub fn default_aggregate_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("runs");
    output.with_file_name(format!("{stem}_aggregate.csv"))
}

fn run_cell(
    plan: &ExperimentPlan,
    net: &NetworkSpec,
    allocation: Option<&Allocation>,
    cell: &Cell,
) -> CliResult<Vec<RunRow>> {
    let row = |objective: f64| RunRow {
        method: cell.method.name().to_string(),
        n: cell.n,
        k_candidates: cell.k,
        n1: cell.n1,
        n2: cell.n2,
        seed: cell.seed,
        objective,
        true_objective: None,
        std_error: None,
        n_distinct_scenarios: None,
        wall_time_ms: 0.0,
    };
    match cell.method {
        Method::Bounds => {
            let q = plan.bounds.as_ref().expect("validated");
            let mut rows = Vec::new();
            for (name, b) in [
                ("bounds:theorem1", Some(theorem1_bound(q)?)),
                ("bounds:theorem2", q.x_space_size.map(|_| theorem2_bound(q)).transpose()?),
                (
                    "bounds:theorem3",
                    q.n_dim.map(|_| theorem3_bound(q)).transpose()?,
                ),
            ] {
                if let Some(b) = b {
                    rows.push(RunRow {
                        method: name.to_string(),
                        n: Some(b.n as usize),
                        ..row(b.raw)
                    });
                }
            }
            Ok(rows)
        }
        Method::Evaluate => {
            let x = allocation.expect("validated");
            let start = std::time::Instant::now();
            let r = mc_evaluate(net, x, cell.n.unwrap(), cell.seed.unwrap())?;
            let wall = elapsed_ms(start);
            let t = true_value(net, x, &plan.true_eval)?;
            Ok(vec![RunRow {
                true_objective: t.map(|t| t.value),
                std_error: Some(r.std_error),
                n_distinct_scenarios: r.per_scenario_values.as_ref().map(Vec::len),
                wall_time_ms: if plan.record_timing { wall } else { 0.0 },
                ..row(r.estimate)
            }])
        }
        m => {
            let params = SolveParams {
                n: cell.n,
                k: cell.k,
                n1: cell.n1,
                n2: cell.n2,
                seed: cell.seed.unwrap_or(0),
                scenarios: None,
            };
            let out = run_method(net, m, &params)?;
            let t = true_value(net, &out.allocation, &plan.true_eval)?;
            // a sampled true value carries its own error; otherwise report the
            // objective's when it is a sample estimate
            let std_error = match t {
                Some(t) if t.sampled => Some(t.std_error),
                _ => out.objective_se,
            };
            Ok(vec![RunRow {
                true_objective: t.map(|t| t.value),
                std_error,
                n_distinct_scenarios: out.n_distinct,
                wall_time_ms: if plan.record_timing { out.wall_ms } else { 0.0 },
                ..row(out.objective)
            }])
        }
    }
}

/// Runs every cell of the plan. Rows come back in plan order whatever the
/// completion order.
pub fn run_plan(loaded: &LoadedPlan) -> CliResult<Vec<RunRow>> {
    let cells = loaded.plan.cells();
    let run = |c: &Cell| run_cell(&loaded.plan, &loaded.net, loaded.allocation.as_ref(), c);
    let nested: Vec<Vec<RunRow>> = if loaded.plan.parallel {
        cells.par_iter().map(run).collect::<CliResult<_>>()?
    } else {
        cells.iter().map(run).collect::<CliResult<_>>()?
    };
    Ok(nested.into_iter().flatten().collect())
}

fn stats(values: &[f64]) -> (f64, f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

/// Groups rows by `(method, n, k_candidates, n1, n2)` in order of first
/// appearance and summarizes each group over its seeds.
pub fn aggregate(rows: &[RunRow]) -> Vec<AggregateRow> {
    type Key = (String, Option<usize>, Option<usize>, Option<usize>, Option<usize>);
    let mut keys: Vec<Key> = Vec::new();
    let mut groups: Vec<Vec<&RunRow>> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.n, r.k_candidates, r.n1, r.n2);
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(r),
            None => {
                keys.push(key);
                groups.push(vec![r]);
            }
        }
    }
    keys.into_iter()
        .zip(groups)
        .map(|((method, n, k, n1, n2), g)| {
            let obj: Vec<f64> = g.iter().map(|r| r.objective).collect();
            let (objective_mean, objective_min, objective_max) = stats(&obj);
            let truth: Option<Vec<f64>> = g.iter().map(|r| r.true_objective).collect();
            let (tm, tmin, tmax, tse) = match truth {
                Some(t) => {
                    let (m, lo, hi) = stats(&t);
                    let se = if t.len() > 1 {
                        let ss: f64 = t.iter().map(|v| (v - m) * (v - m)).sum();
                        (ss / (t.len() - 1) as f64).sqrt() / (t.len() as f64).sqrt()
                    } else {
                        0.0
                    };
                    (Some(m), Some(lo), Some(hi), Some(se))
                }
                None => (None, None, None, None),
            };
            let wall: Vec<f64> = g.iter().map(|r| r.wall_time_ms).collect();
            AggregateRow {
                method,
                n,
                k_candidates: k,
                n1,
                n2,
                runs: g.len(),
                objective_mean,
                objective_min,
                objective_max,
                true_objective_mean: tm,
                true_objective_min: tmin,
                true_objective_max: tmax,
                true_objective_se: tse,
                wall_time_ms_mean: stats(&wall).0,
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> CliResult<()> {
    let text = to_csv(rows, header)?;
    crate::io::write_text(path, &text)
}

/// CSV text with a header row even when `rows` is empty.
pub fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: PathBuf::new(),
        source: std::io::Error::other(e.to_string()),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const AGGREGATE_HEADER: [&str; 14] = [
    "method",
    "n",
    "k_candidates",
    "n1",
    "n2",
    "runs",
    "objective_mean",
    "objective_min",
    "objective_max",
    "true_objective_mean",
    "true_objective_min",
    "true_objective_max",
    "true_objective_se",
    "wall_time_ms_mean",
];

pub fn read_run_csv(path: &Path) -> CliResult<Vec<RunRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| CliError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}
