use rayon::prelude::*;

use crate::network::count_distinct;
use crate::network::{sample_scenarios, FailureScenario, NetworkSpec, ScenarioSet, DEFAULT_ENUMERATION_CAP};
use crate::Result;

use super::model::Model;
use super::{first_stage_dense, Allocation};

/// Value of an allocation: exact (`std_error = 0`) or a sample average.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub estimate: f64,
    pub std_error: f64,
    /// Scenarios evaluated for exact results; draws for sampled ones.
    pub n_samples: usize,
    /// `f2` per scenario (exact) or per distinct draw (sampled), when requested.
    pub per_scenario_values: Option<Vec<f64>>,
}

fn recourse_values(model: &Model, x_in: &[f64], x_out: &[f64], scenarios: &[FailureScenario]) -> Result<Vec<f64>> {
    scenarios
        .par_iter()
        .map(|s| model.recourse(x_in, x_out, s).map(|(v, _)| v))
        .collect()
}

/// `Q(x) = f1(x) + Σ_s p(s)·f2(x, s)` over an explicit set, or over the
/// full enumeration of a Bernoulli space of at most 20 bits.
pub fn exact_evaluate(
    net: &NetworkSpec,
    x: &Allocation,
    scen: &ScenarioSet,
    keep_values: bool,
) -> Result<EvaluationResult> {
    let model = Model::new(net)?;
    let (x_in, x_out) = x.to_dense(net)?;
    scen.validate()?;
    let scenarios = scen.materialize(net, DEFAULT_ENUMERATION_CAP)?;
    let values = recourse_values(&model, &x_in, &x_out, &scenarios)?;
    let expected: f64 = scenarios.iter().zip(&values).map(|(s, v)| s.probability * v).sum();
    Ok(EvaluationResult {
        estimate: first_stage_dense(net, &x_in, &x_out) + expected,
        std_error: 0.0,
        n_samples: scenarios.len(),
        per_scenario_values: keep_values.then_some(values),
    })
}

/// Sample-average estimate `Q_N(x)` from `draws`, solving one recourse
/// program per distinct draw.
pub fn evaluate_on_sample(net: &NetworkSpec, x: &Allocation, draws: &[FailureScenario]) -> Result<EvaluationResult> {
    let model = Model::new(net)?;
    let (x_in, x_out) = x.to_dense(net)?;
    let (distinct, counts) = count_distinct(draws)?;
    let distinct: Vec<FailureScenario> = distinct
        .into_iter()
        .map(|bits| FailureScenario { bits, probability: 1.0 })
        .collect();
    for s in &distinct {
        model.check_bits(s)?;
    }
    let values = recourse_values(&model, &x_in, &x_out, &distinct)?;
    let n = draws.len() as f64;
    let mean: f64 = values.iter().zip(&counts).map(|(v, &c)| v * (c as f64 / n)).sum();
    let ss: f64 = values
        .iter()
        .zip(&counts)
        .map(|(v, &c)| c as f64 * (v - mean) * (v - mean))
        .sum();
    Ok(EvaluationResult {
        estimate: first_stage_dense(net, &x_in, &x_out) + mean,
        std_error: std_error(ss, draws.len()),
        n_samples: draws.len(),
        per_scenario_values: Some(values),
    })
}

fn std_error(sum_sq_dev: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    (sum_sq_dev / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt()
}

/// `Q_N(x)` on `n` draws from the stream seeded by `seed`. The draws are
/// compressed to their distinct configurations before solving.
pub fn mc_evaluate(net: &NetworkSpec, x: &Allocation, n: usize, seed: u64) -> Result<EvaluationResult> {
    if n == 0 {
        return Err(crate::Error::EmptySample);
    }
    let draws = sample_scenarios(net, n, seed);
    evaluate_on_sample(net, x, &draws)
}

/// Same estimate as [`mc_evaluate`] but solving every draw separately and
/// averaging in draw order.
pub fn mc_evaluate_uncompressed(net: &NetworkSpec, x: &Allocation, n: usize, seed: u64) -> Result<EvaluationResult> {
    if n == 0 {
        return Err(crate::Error::EmptySample);
    }
    let model = Model::new(net)?;
    let (x_in, x_out) = x.to_dense(net)?;
    let draws = sample_scenarios(net, n, seed);
    let values = recourse_values(&model, &x_in, &x_out, &draws)?;
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(EvaluationResult {
        estimate: first_stage_dense(net, &x_in, &x_out) + mean,
        std_error: std_error(ss, n),
        n_samples: n,
        per_scenario_values: Some(values),
    })
}
