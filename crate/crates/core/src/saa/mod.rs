//! Exterior Monte-Carlo optimization: fix a sample, optimize over its
//! empirical distribution. Also the best-of-K subselection scheme and the
//! two naive baselines the sampled solutions are compared against.

use rayon::prelude::*;
use serde::Serialize;

use crate::network::{compress_sample, sample_scenarios, FailureScenario, NetworkSpec, ScenarioSet};
use crate::rng::child_seed;
use crate::two_stage::{evaluate_on_sample, exact_optimize, Allocation};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SaaResult {
    /// `x_N^*`.
    pub allocation: Allocation,
    /// `Q_N(x_N^*)`.
    pub saa_objective: f64,
    /// The compressed empirical distribution that was optimized over.
    pub sample: ScenarioSet,
    pub seed: u64,
    pub n_raw: usize,
    pub n_distinct: usize,
}

/// Maximizes the sample average `Q_N` over `n` draws seeded by `seed`.
pub fn saa_optimize(net: &NetworkSpec, n: usize, seed: u64) -> Result<SaaResult> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let draws = sample_scenarios(net, n, seed);
    let sample = compress_sample(&draws)?;
    let sol = exact_optimize(net, &sample)?;
    let n_distinct = sample.scenarios().map_or(0, <[FailureScenario]>::len);
    Ok(SaaResult {
        allocation: sol.allocation,
        saa_objective: sol.objective,
        sample,
        seed,
        n_raw: n,
        n_distinct,
    })
}

/// One entry of the subselection audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub index: usize,
    pub seed: u64,
    pub allocation: Allocation,
    /// `Q_{N1}` at the candidate's own optimum.
    pub objective_n1: f64,
    /// Estimate on the shared evaluation sample.
    pub estimate_n2: f64,
    pub std_error_n2: f64,
}

#[derive(Debug, Clone)]
pub struct SubselectResult {
    /// The winning candidate's SAA solve.
    pub best: SaaResult,
    pub chosen: usize,
    pub candidates: Vec<Candidate>,
    /// Seed of the shared evaluation sample.
    pub eval_seed: u64,
    pub n2_distinct: usize,
}

/// Solves `k` independent SAA problems on `n1` draws (candidate `i` uses
/// `child_seed(seed, i)`), scores every candidate on one shared `n2`-draw
/// sample seeded by `child_seed(seed, k)`, and keeps the best. Ties go to the
/// lowest index.
pub fn subselect_optimize(net: &NetworkSpec, k: usize, n1: usize, n2: usize, seed: u64) -> Result<SubselectResult> {
    if k == 0 {
        return Err(Error::InvalidQuery("subselection needs at least one candidate".into()));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::EmptySample);
    }
    let solves: Vec<SaaResult> = (0..k)
        .into_par_iter()
        .map(|i| saa_optimize(net, n1, child_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    let eval_seed = child_seed(seed, k as u64);
    let draws = sample_scenarios(net, n2, eval_seed);
    let scores = solves
        .par_iter()
        .map(|r| evaluate_on_sample(net, &r.allocation, &draws))
        .collect::<Result<Vec<_>>>()?;
    let n2_distinct = scores[0].per_scenario_values.as_ref().map_or(0, Vec::len);

    let mut chosen = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.estimate > scores[chosen].estimate {
            chosen = i;
        }
    }
    let candidates = solves
        .iter()
        .zip(&scores)
        .enumerate()
        .map(|(index, (r, s))| Candidate {
            index,
            seed: r.seed,
            allocation: r.allocation.clone(),
            objective_n1: r.saa_objective,
            estimate_n2: s.estimate,
            std_error_n2: s.std_error,
        })
        .collect();
    let best = solves.into_iter().nth(chosen).expect("chosen index is in range");
    Ok(SubselectResult {
        best,
        chosen,
        candidates,
        eval_seed,
        n2_distinct,
    })
}

/// Optimum when failures are ignored: the single all-up scenario.
pub fn deterministic_baseline(net: &NetworkSpec) -> Result<Allocation> {
    let set = ScenarioSet::single(FailureScenario::all_up(net.k()));
    Ok(exact_optimize(net, &set)?.allocation)
}

/// The network with each unreliable edge replaced by a reliable one
/// carrying its mean capacity `reliability · capacity`.
pub fn mean_network(net: &NetworkSpec) -> NetworkSpec {
    let edges = net
        .edges()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            if e.reliability < 1.0 {
                e.capacity *= e.reliability;
                e.reliability = 1.0;
            }
            e
        })
        .collect();
    net.with_edges(edges)
}

/// Optimum of the [`mean_network`] surrogate.
pub fn mean_baseline(net: &NetworkSpec) -> Result<Allocation> {
    let set = ScenarioSet::single(FailureScenario::all_up(0));
    Ok(exact_optimize(&mean_network(net), &set)?.allocation)
}

/// Upper bound on the width of the attainable `f2` range over the feasible
/// box: `Σ cap·|refund| + Σ cap·|penalty|`.
pub fn crude_value_range(net: &NetworkSpec) -> f64 {
    net.nodes()
        .iter()
        .filter(|n| n.price_stage2.is_some())
        .map(|n| n.capacity * n.price_stage2.unwrap_or(0.0).abs())
        .sum()
}
