//! Dispatch from a method name to the library's optimizers, shared by the
//! `solve` subcommand and the experiment runner.

use std::time::Instant;

use clap::ValueEnum;
use netalloc::network::{sample_scenarios, FailureScenario, NetworkSpec, ScenarioSet};
use netalloc::saa::{
    deterministic_baseline, mean_baseline, mean_network, saa_optimize, subselect_optimize, SubselectResult,
};
use netalloc::two_stage::{evaluate_on_sample, exact_evaluate, exact_optimize, mc_evaluate, Allocation};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Largest `k` for which the `auto` true-value mode enumerates all scenarios.
pub const AUTO_EXACT_MAX_K: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Saa,
    Subselect,
    Deterministic,
    Mean,
    Evaluate,
    Bounds,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Saa => "saa",
            Method::Subselect => "subselect",
            Method::Deterministic => "deterministic",
            Method::Mean => "mean",
            Method::Evaluate => "evaluate",
            Method::Bounds => "bounds",
        }
    }
}

/// How the `true_objective` column is filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TrueEval {
    /// Exact when `k ≤ 12`, otherwise omitted.
    #[default]
    Auto,
    Exact,
    None,
    /// Monte-Carlo estimate on `n` draws seeded by `seed`.
    Mc { n: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueValue {
    pub value: f64,
    pub std_error: f64,
    pub sampled: bool,
}

pub fn true_value(net: &NetworkSpec, x: &Allocation, mode: &TrueEval) -> CliResult<Option<TrueValue>> {
    let exact = |net: &NetworkSpec| -> CliResult<Option<TrueValue>> {
        let r = exact_evaluate(net, x, &ScenarioSet::bernoulli(net), false)?;
        Ok(Some(TrueValue {
            value: r.estimate,
            std_error: 0.0,
            sampled: false,
        }))
    };
    match mode {
        TrueEval::None => Ok(None),
        TrueEval::Exact => exact(net),
        TrueEval::Auto if net.k() <= AUTO_EXACT_MAX_K => exact(net),
        TrueEval::Auto => Ok(None),
        TrueEval::Mc { n, seed } => {
            let r = mc_evaluate(net, x, *n, *seed)?;
            Ok(Some(TrueValue {
                value: r.estimate,
                std_error: r.std_error,
                sampled: true,
            }))
        }
    }
}

/// Parameters of one solve. Fields a method does not use are ignored.
#[derive(Debug, Clone, Default)]
pub struct SolveParams {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub seed: u64,
    /// Explicit scenario set for `exact`; the full enumeration otherwise.
    pub scenarios: Option<ScenarioSet>,
}

impl SolveParams {
    fn need(v: Option<usize>, flag: &str, method: Method) -> CliResult<usize> {
        v.ok_or_else(|| CliError::domain(format!("method {} needs --{flag}", method.name())))
    }

    /// `n2`, defaulting to `2·n1`.
    pub fn resolved_n2(&self) -> Option<usize> {
        self.n2.or(self.n1.map(|n1| 2 * n1))
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub allocation: Allocation,
    /// The method's own objective: the optimum of the program it solved, or
    /// the selection estimate for subselection.
    pub objective: f64,
    /// Standard error of `objective` when it is a sample estimate.
    pub objective_se: Option<f64>,
    pub n_distinct: Option<usize>,
    pub wall_ms: f64,
    pub audit: Option<SubselectResult>,
}

/// Runs one optimizer. The wall time covers the optimization only.
pub fn run_method(net: &NetworkSpec, method: Method, p: &SolveParams) -> CliResult<Outcome> {
    let start = Instant::now();
    let mut out = match method {
        Method::Exact => {
            let set = p.scenarios.clone().unwrap_or_else(|| ScenarioSet::bernoulli(net));
            let sol = exact_optimize(net, &set)?;
            let n_distinct = set.scenarios().map_or(1usize << net.k(), <[FailureScenario]>::len);
            Outcome {
                allocation: sol.allocation,
                objective: sol.objective,
                objective_se: None,
                n_distinct: Some(n_distinct),
                wall_ms: 0.0,
                audit: None,
            }
        }
        Method::Saa => {
            let n = SolveParams::need(p.n, "n", method)?;
            let r = saa_optimize(net, n, p.seed)?;
            let elapsed = elapsed_ms(start);
            // the sample's own standard error, recomputed from the same draws
            let draws = sample_scenarios(net, n, p.seed);
            let se = evaluate_on_sample(net, &r.allocation, &draws)?.std_error;
            return Ok(Outcome {
                allocation: r.allocation,
                objective: r.saa_objective,
                objective_se: Some(se),
                n_distinct: Some(r.n_distinct),
                wall_ms: elapsed,
                audit: None,
            });
        }
        Method::Subselect => {
            let k = SolveParams::need(p.k, "k", method)?;
            let n1 = SolveParams::need(p.n1, "n1", method)?;
            let n2 = p.resolved_n2().expect("n1 is present");
            let r = subselect_optimize(net, k, n1, n2, p.seed)?;
            let c = &r.candidates[r.chosen];
            Outcome {
                allocation: r.best.allocation.clone(),
                objective: c.estimate_n2,
                objective_se: Some(c.std_error_n2),
                n_distinct: Some(r.best.n_distinct),
                wall_ms: 0.0,
                audit: Some(r),
            }
        }
        Method::Deterministic => {
            let x = deterministic_baseline(net)?;
            let set = ScenarioSet::single(FailureScenario::all_up(net.k()));
            let objective = exact_evaluate(net, &x, &set, false)?.estimate;
            Outcome {
                allocation: x,
                objective,
                objective_se: None,
                n_distinct: Some(1),
                wall_ms: 0.0,
                audit: None,
            }
        }
        Method::Mean => {
            let x = mean_baseline(net)?;
            let surrogate = mean_network(net);
            let objective = exact_evaluate(&surrogate, &x, &ScenarioSet::bernoulli(&surrogate), false)?.estimate;
            Outcome {
                allocation: x,
                objective,
                objective_se: None,
                n_distinct: Some(1),
                wall_ms: 0.0,
                audit: None,
            }
        }
        Method::Evaluate | Method::Bounds => {
            return Err(CliError::domain(format!(
                "method {} does not produce an allocation",
                method.name()
            )))
        }
    };
    out.wall_ms = elapsed_ms(start);
    Ok(out)
}

pub fn elapsed_ms(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
}
