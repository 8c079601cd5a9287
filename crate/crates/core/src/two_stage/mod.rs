//! The two-stage allocation problem: first-stage contracts, per-scenario
//! recourse programs, and exact or Monte-Carlo evaluation of the combined
//! objective `Q(x) = f1(x) + E[f2(x, s)]`.

mod equivalent;
mod evaluate;
mod model;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::network::{ensure_valid, NetworkSpec, NodeKind};
use crate::{Error, Result};

pub use equivalent::{
    build_deterministic_equivalent, exact_optimize, exact_optimize_with, ColumnMap,
    DeterministicEquivalent, ExactOptions, ExactSolution,
};
pub use evaluate::{
    evaluate_on_sample, exact_evaluate, mc_evaluate, mc_evaluate_uncompressed, EvaluationResult,
};
pub use model::{build_recourse_lp, recourse_value, solve_recourse, RecourseDecision, RecourseProgram};

/// First-stage decision: units bought from each producer and contracted for
/// sale to each consumer. Ids missing from a map are read as zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    #[serde(default)]
    pub producers: BTreeMap<String, f64>,
    #[serde(default)]
    pub consumers: BTreeMap<String, f64>,
}

/// Slack allowed when checking amounts against capacities, relative to the capacity.
const CAPACITY_SLACK: f64 = 1e-9;

impl Allocation {
    pub fn zeros(net: &NetworkSpec) -> Self {
        let mut a = Allocation::default();
        for n in net.nodes() {
            match n.kind {
                NodeKind::Producer => {
                    a.producers.insert(n.id.clone(), 0.0);
                }
                NodeKind::Consumer => {
                    a.consumers.insert(n.id.clone(), 0.0);
                }
                NodeKind::Regular => {}
            }
        }
        a
    }

    /// Builds an allocation from amounts listed in producer and consumer
    /// declaration order.
    pub fn from_dense(net: &NetworkSpec, x_in: &[f64], x_out: &[f64]) -> Self {
        let mut a = Allocation::default();
        for (&j, &v) in net.producers().iter().zip(x_in) {
            a.producers.insert(net.nodes()[j].id.clone(), v);
        }
        for (&i, &v) in net.consumers().iter().zip(x_out) {
            a.consumers.insert(net.nodes()[i].id.clone(), v);
        }
        a
    }

    /// Amounts in producer and consumer declaration order, clamped into
    /// `[0, capacity]` after checking they lie there up to a relative 1e-9.
    pub fn to_dense(&self, net: &NetworkSpec) -> Result<(Vec<f64>, Vec<f64>)> {
        let check = |map: &BTreeMap<String, f64>, kind: NodeKind| -> Result<Vec<f64>> {
            for id in map.keys() {
                match net.node_index(id) {
                    None => {
                        return Err(Error::InvalidAllocation(format!("unknown node {id:?}")));
                    }
                    Some(i) if net.nodes()[i].kind != kind => {
                        return Err(Error::InvalidAllocation(format!(
                            "node {id:?} is not a {kind:?}"
                        )));
                    }
                    Some(_) => {}
                }
            }
            net.nodes_of_kind(kind)
                .map(|i| {
                    let node = &net.nodes()[i];
                    let v = map.get(&node.id).copied().unwrap_or(0.0);
                    let slack = CAPACITY_SLACK * (1.0 + node.capacity);
                    if !v.is_finite() || v < -slack || v > node.capacity + slack {
                        return Err(Error::InvalidAllocation(format!(
                            "{:?} amount {v} outside [0, {}]",
                            node.id, node.capacity
                        )));
                    }
                    Ok(v.clamp(0.0, node.capacity))
                })
                .collect()
        };
        Ok((
            check(&self.producers, NodeKind::Producer)?,
            check(&self.consumers, NodeKind::Consumer)?,
        ))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Allocation {
            producers: self.producers.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
            consumers: self.consumers.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    /// Largest absolute difference between two allocations over all ids.
    pub fn max_abs_diff(&self, other: &Allocation) -> f64 {
        let side = |a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>| {
            a.keys()
                .chain(b.keys())
                .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
                .fold(0.0f64, f64::max)
        };
        side(&self.producers, &other.producers).max(side(&self.consumers, &other.consumers))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("allocation serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `f1(x) = Σ sale·x_out − Σ purchase·x_in`.
pub fn first_stage_value(net: &NetworkSpec, x: &Allocation) -> Result<f64> {
    ensure_valid(net)?;
    let (x_in, x_out) = x.to_dense(net)?;
    Ok(first_stage_dense(net, &x_in, &x_out))
}

pub(crate) fn first_stage_dense(net: &NetworkSpec, x_in: &[f64], x_out: &[f64]) -> f64 {
    let sales: f64 = net
        .consumers()
        .iter()
        .zip(x_out)
        .map(|(&i, v)| net.nodes()[i].stage1() * v)
        .sum();
    let purchases: f64 = net
        .producers()
        .iter()
        .zip(x_in)
        .map(|(&j, v)| net.nodes()[j].stage1() * v)
        .sum();
    sales - purchases
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::one_edge;

    fn ten(net: &NetworkSpec) -> Allocation {
        Allocation::from_dense(net, &[10.0], &[10.0])
    }

    #[test]
    fn zero_allocation_has_zero_first_stage_value() {
        let net = one_edge(0.9);
        assert_eq!(first_stage_value(&net, &Allocation::zeros(&net)).unwrap(), 0.0);
    }

    #[test]
    fn first_stage_value_of_the_one_edge_model() {
        let net = one_edge(0.9);
        assert_eq!(first_stage_value(&net, &ten(&net)).unwrap(), 10.0);
        let half = ten(&net).scaled(0.5);
        assert_eq!(2.0 * first_stage_value(&net, &half).unwrap(), 10.0);
    }

    #[test]
    fn allocation_errors() {
        let net = one_edge(0.9);
        let mut a = ten(&net);
        a.producers.insert("ghost".into(), 1.0);
        assert!(matches!(first_stage_value(&net, &a), Err(Error::InvalidAllocation(_))));
        let over = Allocation::from_dense(&net, &[10.5], &[0.0]);
        assert!(first_stage_value(&net, &over).is_err());
        let wrong_kind = Allocation {
            producers: [("C".to_string(), 1.0)].into_iter().collect(),
            ..Allocation::default()
        };
        assert!(first_stage_value(&net, &wrong_kind).is_err());
    }

    #[test]
    fn allocation_file_round_trip() {
        let net = one_edge(0.9);
        let a = Allocation::from_dense(&net, &[1.0 / 3.0], &[7.0]);
        let text = a.to_json();
        assert!(text.contains("\"producers\""));
        assert_eq!(Allocation::from_json(&text).unwrap(), a);
    }
}
