//! The deterministic equivalent: one LP holding the first-stage amounts and
//! a copy of the recourse columns for every scenario.

use crate::lp::{solve_lp, LinearProgram, Relation, Sense, SolveStatus};
use crate::network::{NetworkSpec, ScenarioSet, DEFAULT_ENUMERATION_CAP};
use crate::{Error, Result};

use super::model::Model;
use super::{Allocation, RecourseDecision};

/// Maps LP columns back to first-stage amounts and per-scenario recourse.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub n_producers: usize,
    pub n_consumers: usize,
    pub n_edges: usize,
    /// First column of each scenario block.
    pub scenario_base: Vec<usize>,
}

impl ColumnMap {
    pub fn producer(&self, j: usize) -> usize {
        j
    }

    pub fn consumer(&self, i: usize) -> usize {
        self.n_producers + i
    }

    pub fn block_width(&self) -> usize {
        self.n_edges + self.n_producers + self.n_consumers
    }

    pub fn edge(&self, s: usize, e: usize) -> usize {
        self.scenario_base[s] + e
    }

    pub fn delivered_in(&self, s: usize, j: usize) -> usize {
        self.scenario_base[s] + self.n_edges + j
    }

    pub fn delivered_out(&self, s: usize, i: usize) -> usize {
        self.scenario_base[s] + self.n_edges + self.n_producers + i
    }

    /// Column count `(P + C) + |S|·(E + P + C)`.
    pub fn n_columns(&self) -> usize {
        self.n_producers + self.n_consumers + self.scenario_base.len() * self.block_width()
    }
}

#[derive(Debug, Clone)]
pub struct DeterministicEquivalent {
    pub lp: LinearProgram,
    pub map: ColumnMap,
}

impl DeterministicEquivalent {
    pub fn allocation(&self, net: &NetworkSpec, primal: &[f64]) -> Allocation {
        let x_in: Vec<f64> = (0..self.map.n_producers).map(|j| primal[self.map.producer(j)]).collect();
        let x_out: Vec<f64> = (0..self.map.n_consumers).map(|i| primal[self.map.consumer(i)]).collect();
        Allocation::from_dense(net, &x_in, &x_out)
    }

    pub fn recourse(&self, net: &NetworkSpec, primal: &[f64], s: usize) -> RecourseDecision {
        let m = &self.map;
        RecourseDecision {
            edge_flows: (0..m.n_edges).map(|e| primal[m.edge(s, e)]).collect(),
            delivered_in: net
                .producers()
                .iter()
                .enumerate()
                .map(|(j, &n)| (net.nodes()[n].id.clone(), primal[m.delivered_in(s, j)]))
                .collect(),
            delivered_out: net
                .consumers()
                .iter()
                .enumerate()
                .map(|(i, &n)| (net.nodes()[n].id.clone(), primal[m.delivered_out(s, i)]))
                .collect(),
        }
    }
}

fn block_count_check(model: &Model, n_scenarios: usize, limit: usize) -> Result<()> {
    let columns = model
        .block_width()
        .saturating_mul(n_scenarios)
        .saturating_add(model.producers.len() + model.consumers.len());
    if columns > limit {
        return Err(Error::TooLarge { columns, limit });
    }
    Ok(())
}

pub fn build_deterministic_equivalent(net: &NetworkSpec, scen: &ScenarioSet) -> Result<DeterministicEquivalent> {
    build_with_limit(net, scen, usize::MAX)
}

fn build_with_limit(net: &NetworkSpec, scen: &ScenarioSet, limit: usize) -> Result<DeterministicEquivalent> {
    let model = Model::new(net)?;
    scen.validate()?;
    let Some(scenarios) = scen.scenarios() else {
        return Err(Error::InvalidScenarios(
            "the deterministic equivalent needs an explicit scenario set".into(),
        ));
    };
    if scen.k() != net.k() {
        return Err(Error::BitLength {
            expected: net.k(),
            found: scen.k(),
        });
    }
    block_count_check(&model, scenarios.len(), limit)?;

    let mut lp = LinearProgram::new(Sense::Maximize);
    let total_p: f64 = scenarios.iter().map(|s| s.probability).sum();
    // undelivered refunds and penalties are folded into the first-stage costs
    for (j, &n) in model.producers.iter().enumerate() {
        let node = &net.nodes()[n];
        lp.add_var(-node.stage1() + total_p * model.refund[j], 0.0, node.capacity);
    }
    for (i, &n) in model.consumers.iter().enumerate() {
        let node = &net.nodes()[n];
        lp.add_var(node.stage1() - total_p * model.penalty[i], 0.0, node.capacity);
    }
    let y_in_upper: Vec<f64> = model.producers.iter().map(|&n| net.nodes()[n].capacity).collect();
    let y_out_upper: Vec<f64> = model.consumers.iter().map(|&n| net.nodes()[n].capacity).collect();
    let mut scenario_base = Vec::with_capacity(scenarios.len());
    let n_edges = model.n_edges();
    let n_producers = model.producers.len();
    for s in scenarios {
        let base = model.push_block(&mut lp, s, s.probability, &y_in_upper, &y_out_upper);
        for j in 0..n_producers {
            lp.add_constraint(vec![(base + n_edges + j, 1.0), (j, -1.0)], Relation::Le, 0.0);
        }
        for i in 0..model.consumers.len() {
            lp.add_constraint(
                vec![(base + n_edges + n_producers + i, 1.0), (n_producers + i, -1.0)],
                Relation::Le,
                0.0,
            );
        }
        scenario_base.push(base);
    }
    Ok(DeterministicEquivalent {
        lp,
        map: ColumnMap {
            n_producers,
            n_consumers: model.consumers.len(),
            n_edges,
            scenario_base,
        },
    })
}

#[derive(Debug, Clone)]
pub struct ExactOptions {
    /// Largest Bernoulli bit-length enumerated automatically.
    pub enumeration_cap: usize,
    /// Refuse deterministic equivalents wider than this many columns.
    pub max_columns: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            max_columns: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub allocation: Allocation,
    /// Optimal `f1 + Σ p·f2` over the scenario set.
    pub objective: f64,
    pub n_columns: usize,
    pub n_rows: usize,
    pub iterations: usize,
}

pub fn exact_optimize(net: &NetworkSpec, scen: &ScenarioSet) -> Result<ExactSolution> {
    exact_optimize_with(net, scen, &ExactOptions::default())
}

/// Solves the deterministic equivalent over `scen` (enumerating Bernoulli
/// spaces first) and extracts the first-stage allocation.
pub fn exact_optimize_with(net: &NetworkSpec, scen: &ScenarioSet, opts: &ExactOptions) -> Result<ExactSolution> {
    let explicit;
    let scen = match scen {
        ScenarioSet::Explicit { .. } => scen,
        ScenarioSet::IndependentBernoulli { .. } => {
            let model = Model::new(net)?;
            let k = net.k();
            if k <= opts.enumeration_cap && k < usize::BITS as usize - 1 {
                block_count_check(&model, 1usize << k, opts.max_columns)?;
            }
            explicit = ScenarioSet::Explicit {
                k,
                scenarios: scen.materialize(net, opts.enumeration_cap)?,
            };
            &explicit
        }
    };
    let de = build_with_limit(net, scen, opts.max_columns)?;
    let report = solve_lp(&de.lp)?;
    if report.status != SolveStatus::Optimal {
        return Err(Error::UnexpectedStatus(report.status));
    }
    Ok(ExactSolution {
        allocation: de.allocation(net, &report.primal),
        objective: report.objective_value.unwrap(),
        n_columns: de.lp.n_vars(),
        n_rows: de.lp.n_constraints(),
        iterations: report.iterations,
    })
}
