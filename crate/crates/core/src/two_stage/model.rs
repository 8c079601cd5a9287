//! Second-stage (recourse) programs.
//!
//! For a fixed allocation and scenario the recourse program routes flow
//! from producers to consumers. Columns are laid out as edge flows, then
//! delivered amounts per producer, then per consumer. Rows are one
//! conservation equality per node (producers inject exactly their delivered
//! amount, consumers absorb exactly theirs, regular nodes conserve flow) and
//! one throughput row per regular node with finite capacity. Failed edges get
//! an upper bound of zero.

use std::collections::BTreeMap;

use crate::lp::{solve_lp, LinearProgram, Relation, Sense, SolveStatus};
use crate::network::{ensure_valid, FailureScenario, NetworkSpec, NodeKind};
use crate::{Error, Result};

use super::Allocation;

/// Index tables derived once from a validated network.
pub(crate) struct Model {
    pub producers: Vec<usize>,
    pub consumers: Vec<usize>,
    pub edge_ends: Vec<(usize, usize)>,
    pub edge_cap: Vec<f64>,
    /// Scenario bit of each edge, if unreliable.
    pub edge_bit: Vec<Option<usize>>,
    pub k: usize,
    pub kinds: Vec<NodeKind>,
    pub node_cap: Vec<f64>,
    /// Position of a node among producers or consumers.
    pub role_index: Vec<usize>,
    pub refund: Vec<f64>,
    pub penalty: Vec<f64>,
}

impl Model {
    pub fn new(net: &NetworkSpec) -> Result<Self> {
        ensure_valid(net)?;
        let producers = net.producers();
        let consumers = net.consumers();
        let mut role_index = vec![usize::MAX; net.nodes().len()];
        for (j, &n) in producers.iter().enumerate() {
            role_index[n] = j;
        }
        for (i, &n) in consumers.iter().enumerate() {
            role_index[n] = i;
        }
        let mut edge_bit = vec![None; net.edges().len()];
        for (b, &e) in net.unreliable_edges().iter().enumerate() {
            edge_bit[e] = Some(b);
        }
        Ok(Model {
            refund: producers.iter().map(|&j| net.nodes()[j].stage2()).collect(),
            penalty: consumers.iter().map(|&i| net.nodes()[i].stage2()).collect(),
            producers,
            consumers,
            edge_ends: net
                .edges()
                .iter()
                .map(|e| (net.node_index(&e.from).unwrap(), net.node_index(&e.to).unwrap()))
                .collect(),
            edge_cap: net.edges().iter().map(|e| e.capacity).collect(),
            edge_bit,
            k: net.k(),
            kinds: net.nodes().iter().map(|n| n.kind).collect(),
            node_cap: net.nodes().iter().map(|n| n.capacity).collect(),
            role_index,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edge_ends.len()
    }

    /// Columns per scenario: edges, then producers, then consumers.
    pub fn block_width(&self) -> usize {
        self.n_edges() + self.producers.len() + self.consumers.len()
    }

    pub fn check_bits(&self, s: &FailureScenario) -> Result<()> {
        if s.bits.len() != self.k {
            return Err(Error::BitLength {
                expected: self.k,
                found: s.bits.len(),
            });
        }
        Ok(())
    }

    pub fn edge_upper(&self, e: usize, s: &FailureScenario) -> f64 {
        match self.edge_bit[e] {
            Some(b) if !s.bits[b] => 0.0,
            _ => self.edge_cap[e],
        }
    }

    /// Appends one scenario block of recourse columns starting at column
    /// `lp.n_vars()` with objective weight `weight`, and its node rows.
    /// Delivered amounts get upper bounds `y_upper`.
    pub fn push_block(
        &self,
        lp: &mut LinearProgram,
        s: &FailureScenario,
        weight: f64,
        y_in_upper: &[f64],
        y_out_upper: &[f64],
    ) -> usize {
        let base = lp.n_vars();
        for e in 0..self.n_edges() {
            lp.add_var(0.0, 0.0, self.edge_upper(e, s));
        }
        for (j, &u) in y_in_upper.iter().enumerate() {
            lp.add_var(-weight * self.refund[j], 0.0, u);
        }
        for (i, &u) in y_out_upper.iter().enumerate() {
            lp.add_var(weight * self.penalty[i], 0.0, u);
        }
        let n_nodes = self.kinds.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_nodes];
        let mut inflow: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_nodes];
        for (e, &(from, to)) in self.edge_ends.iter().enumerate() {
            rows[from].push((base + e, 1.0));
            rows[to].push((base + e, -1.0));
            inflow[to].push((base + e, 1.0));
        }
        let y_in0 = base + self.n_edges();
        let y_out0 = y_in0 + self.producers.len();
        for (node, mut row) in rows.into_iter().enumerate() {
            match self.kinds[node] {
                // net outflow equals delivered supply
                NodeKind::Producer => row.push((y_in0 + self.role_index[node], -1.0)),
                // net inflow equals delivered demand
                NodeKind::Consumer => {
                    for t in row.iter_mut() {
                        t.1 = -t.1;
                    }
                    row.push((y_out0 + self.role_index[node], -1.0));
                }
                NodeKind::Regular => {}
            }
            lp.add_constraint(row, Relation::Eq, 0.0);
        }
        for (node, row) in inflow.into_iter().enumerate() {
            if self.kinds[node] == NodeKind::Regular && self.node_cap[node].is_finite() {
                lp.add_constraint(row, Relation::Le, self.node_cap[node]);
            }
        }
        base
    }

    /// `Σ refund·x_in − Σ penalty·x_out`: the value of `f3` when nothing is delivered.
    pub fn undelivered_value(&self, x_in: &[f64], x_out: &[f64]) -> f64 {
        let refunds: f64 = self.refund.iter().zip(x_in).map(|(r, x)| r * x).sum();
        let penalties: f64 = self.penalty.iter().zip(x_out).map(|(r, x)| r * x).sum();
        refunds - penalties
    }

    pub fn recourse_program(&self, x_in: &[f64], x_out: &[f64], s: &FailureScenario) -> Result<RecourseProgram> {
        self.check_bits(s)?;
        let mut lp = LinearProgram::new(Sense::Maximize);
        self.push_block(&mut lp, s, 1.0, x_in, x_out);
        Ok(RecourseProgram {
            lp,
            constant: self.undelivered_value(x_in, x_out),
            n_edges: self.n_edges(),
            n_producers: self.producers.len(),
        })
    }

    pub fn recourse(&self, x_in: &[f64], x_out: &[f64], s: &FailureScenario) -> Result<(f64, Vec<f64>)> {
        let prog = self.recourse_program(x_in, x_out, s)?;
        let report = solve_lp(&prog.lp)?;
        if report.status != SolveStatus::Optimal {
            return Err(Error::UnexpectedStatus(report.status));
        }
        Ok((prog.constant + report.objective_value.unwrap(), report.primal))
    }
}

/// A recourse program. Its LP objective is `f3` minus the constant
/// `Σ refund·x_in − Σ penalty·x_out`, which is carried separately.
#[derive(Debug, Clone)]
pub struct RecourseProgram {
    pub lp: LinearProgram,
    pub constant: f64,
    n_edges: usize,
    n_producers: usize,
}

impl RecourseProgram {
    pub fn edge_column(&self, e: usize) -> usize {
        e
    }

    pub fn producer_column(&self, j: usize) -> usize {
        self.n_edges + j
    }

    pub fn consumer_column(&self, i: usize) -> usize {
        self.n_edges + self.n_producers + i
    }
}

/// Optimal second-stage routing for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RecourseDecision {
    /// Flow per edge, in edge declaration order.
    pub edge_flows: Vec<f64>,
    pub delivered_in: BTreeMap<String, f64>,
    pub delivered_out: BTreeMap<String, f64>,
}

pub fn build_recourse_lp(net: &NetworkSpec, x: &Allocation, s: &FailureScenario) -> Result<RecourseProgram> {
    let model = Model::new(net)?;
    let (x_in, x_out) = x.to_dense(net)?;
    model.recourse_program(&x_in, &x_out, s)
}

/// `f2(x, s)`: the optimal recourse value.
pub fn recourse_value(net: &NetworkSpec, x: &Allocation, s: &FailureScenario) -> Result<f64> {
    solve_recourse(net, x, s).map(|(v, _)| v)
}

pub fn solve_recourse(net: &NetworkSpec, x: &Allocation, s: &FailureScenario) -> Result<(f64, RecourseDecision)> {
    let model = Model::new(net)?;
    let (x_in, x_out) = x.to_dense(net)?;
    let (value, primal) = model.recourse(&x_in, &x_out, s)?;
    let e = model.n_edges();
    let p = model.producers.len();
    let decision = RecourseDecision {
        edge_flows: primal[..e].to_vec(),
        delivered_in: model
            .producers
            .iter()
            .enumerate()
            .map(|(j, &n)| (net.nodes()[n].id.clone(), primal[e + j]))
            .collect(),
        delivered_out: model
            .consumers
            .iter()
            .enumerate()
            .map(|(i, &n)| (net.nodes()[n].id.clone(), primal[e + p + i]))
            .collect(),
    };
    Ok((value, decision))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::check_solution;
    use crate::network::tests::one_edge;
    use crate::network::{generate_random_network, EdgeSpec, GeneratorParams, NodeSpec};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn up() -> FailureScenario {
        FailureScenario::all_up(1)
    }

    fn down() -> FailureScenario {
        FailureScenario {
            bits: vec![false],
            probability: 1.0,
        }
    }

    #[test]
    fn all_failed_collapses_to_undelivered_value() {
        let net = one_edge(0.9);
        let x = Allocation::from_dense(&net, &[4.0], &[6.0]);
        // 0.5·4 − 3·6
        assert_eq!(recourse_value(&net, &x, &down()).unwrap(), 2.0 - 18.0);
    }

    #[test]
    fn zero_allocation_has_zero_recourse() {
        let net = one_edge(0.9);
        let x = Allocation::zeros(&net);
        assert_eq!(recourse_value(&net, &x, &up()).unwrap(), 0.0);
        assert_eq!(recourse_value(&net, &x, &down()).unwrap(), 0.0);
    }

    #[test]
    fn operating_edge_delivers_everything() {
        let net = one_edge(0.9);
        for a in [0.0, 2.5, 10.0] {
            let x = Allocation::from_dense(&net, &[a], &[a]);
            let (v, d) = solve_recourse(&net, &x, &up()).unwrap();
            assert!(v.abs() < 1e-12);
            assert!((d.delivered_in["P"] - a).abs() < 1e-12);
            assert!((d.delivered_out["C"] - a).abs() < 1e-12);
            assert!((d.edge_flows[0] - a).abs() < 1e-12);
        }
    }

    #[test]
    fn regular_node_capacity_limits_throughput() {
        let net = NetworkSpec::new(
            vec![
                NodeSpec::producer("P", 10.0, 1.0, 0.5),
                NodeSpec::regular("R", 4.0),
                NodeSpec::consumer("C", 10.0, 2.0, 3.0),
            ],
            vec![EdgeSpec::new("P", "R", 10.0, 1.0), EdgeSpec::new("R", "C", 10.0, 1.0)],
        );
        let x = Allocation::from_dense(&net, &[10.0], &[10.0]);
        let (v, d) = solve_recourse(&net, &x, &FailureScenario::all_up(0)).unwrap();
        // deliver 4, the remaining 6 are refunded at 0.5 and penalized at 3
        assert!((v - (6.0 * 0.5 - 6.0 * 3.0)).abs() < 1e-12);
        assert!((d.delivered_out["C"] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bit_length_mismatch_is_rejected() {
        let net = one_edge(0.9);
        let x = Allocation::zeros(&net);
        assert!(matches!(
            recourse_value(&net, &x, &FailureScenario::all_up(2)),
            Err(Error::BitLength { .. })
        ));
    }

    #[test]
    fn recourse_solutions_satisfy_flow_invariants() {
        let params = GeneratorParams::default();
        let net = generate_random_network(&params, 17).unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..30 {
            let x_in: Vec<f64> = net.producers().iter().map(|&j| rng.gen_range(0.0..=net.nodes()[j].capacity)).collect();
            let x_out: Vec<f64> = net.consumers().iter().map(|&i| rng.gen_range(0.0..=net.nodes()[i].capacity)).collect();
            let x = Allocation::from_dense(&net, &x_in, &x_out);
            let s = crate::network::sample_scenario(&net, &mut rng);
            let prog = build_recourse_lp(&net, &x, &s).unwrap();
            let report = solve_lp(&prog.lp).unwrap();
            let res = check_solution(&prog.lp, &report.primal).unwrap();
            assert!(res.max_violation() <= 1e-9);
            for (b, &e) in net.unreliable_edges().iter().enumerate() {
                if !s.bits[b] {
                    assert_eq!(report.primal[prog.edge_column(e)], 0.0);
                }
            }
            for (j, &xj) in x_in.iter().enumerate() {
                assert!(report.primal[prog.producer_column(j)] <= xj + 1e-12);
            }
            for (i, &xi) in x_out.iter().enumerate() {
                assert!(report.primal[prog.consumer_column(i)] <= xi + 1e-12);
            }
        }
    }

    #[test]
    fn fewer_operating_edges_never_help() {
        let params = GeneratorParams::default();
        let net = generate_random_network(&params, 23).unwrap();
        let mut rng = rng_from_seed(8);
        for _ in 0..40 {
            let x_in: Vec<f64> = net.producers().iter().map(|&j| rng.gen_range(0.0..=net.nodes()[j].capacity)).collect();
            let x_out: Vec<f64> = net.consumers().iter().map(|&i| rng.gen_range(0.0..=net.nodes()[i].capacity)).collect();
            let x = Allocation::from_dense(&net, &x_in, &x_out);
            let s = crate::network::sample_scenario(&net, &mut rng);
            let mut worse = s.clone();
            for bit in worse.bits.iter_mut() {
                if rng.gen_bool(0.4) {
                    *bit = false;
                }
            }
            assert!(worse.is_below(&s));
            let hi = recourse_value(&net, &x, &s).unwrap();
            let lo = recourse_value(&net, &x, &worse).unwrap();
            assert!(lo <= hi + 1e-7, "{lo} > {hi}");
            let floor = Model::new(&net).unwrap().undelivered_value(&x_in, &x_out).min(0.0);
            assert!(lo >= floor - 1e-9);
        }
    }
}
