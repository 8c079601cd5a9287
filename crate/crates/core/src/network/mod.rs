//! Problem instances: transportation networks with unreliable edges.

mod generate;
mod scenario;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use generate::{generate_random_network, GeneratorParams};
pub use scenario::{
    compress_sample, enumerate_scenarios, sample_scenario, sample_scenarios, FailureScenario,
    ScenarioSet, DEFAULT_ENUMERATION_CAP,
};
pub(crate) use scenario::count_distinct;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Producer,
    Consumer,
    Regular,
}

fn unbounded() -> f64 {
    f64::INFINITY
}

fn is_unbounded(c: &f64) -> bool {
    c.is_infinite()
}

/// A node of the network.
///
/// `capacity` is the purchase limit for producers, the sales limit for
/// consumers, and the throughput limit for regular nodes (unbounded when
/// omitted from the file). `price_stage1` is the purchase or sale price paid
/// up front; `price_stage2` is the per-unit refund (producers) or penalty
/// (consumers) applied to undelivered contract amounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default = "unbounded", skip_serializing_if = "is_unbounded")]
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_stage1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_stage2: Option<f64>,
}

impl NodeSpec {
    pub fn producer(id: impl Into<String>, capacity: f64, purchase: f64, refund: f64) -> Self {
        NodeSpec {
            id: id.into(),
            kind: NodeKind::Producer,
            capacity,
            price_stage1: Some(purchase),
            price_stage2: Some(refund),
        }
    }

    pub fn consumer(id: impl Into<String>, capacity: f64, sale: f64, penalty: f64) -> Self {
        NodeSpec {
            id: id.into(),
            kind: NodeKind::Consumer,
            capacity,
            price_stage1: Some(sale),
            price_stage2: Some(penalty),
        }
    }

    pub fn regular(id: impl Into<String>, capacity: f64) -> Self {
        NodeSpec {
            id: id.into(),
            kind: NodeKind::Regular,
            capacity,
            price_stage1: None,
            price_stage2: None,
        }
    }

    pub(crate) fn stage1(&self) -> f64 {
        self.price_stage1.unwrap_or(0.0)
    }

    pub(crate) fn stage2(&self) -> f64 {
        self.price_stage2.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub capacity: f64,
    /// Probability that the edge operates; 1 marks a reliable edge.
    pub reliability: f64,
}

impl EdgeSpec {
    pub fn new(from: impl Into<String>, to: impl Into<String>, capacity: f64, reliability: f64) -> Self {
        EdgeSpec {
            from: from.into(),
            to: to.into(),
            capacity,
            reliability,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeSpec>,
    edges: Vec<EdgeSpec>,
}

/// A problem instance. The unreliable edges (reliability below one), in
/// declaration order, define the bit positions of every failure scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NetworkFile", into = "NetworkFile")]
pub struct NetworkSpec {
    nodes: Vec<NodeSpec>,
    edges: Vec<EdgeSpec>,
    unreliable: Vec<usize>,
    index: HashMap<String, usize>,
}

impl From<NetworkFile> for NetworkSpec {
    fn from(f: NetworkFile) -> Self {
        NetworkSpec::new(f.nodes, f.edges)
    }
}

impl From<NetworkSpec> for NetworkFile {
    fn from(n: NetworkSpec) -> Self {
        NetworkFile {
            nodes: n.nodes,
            edges: n.edges,
        }
    }
}

impl NetworkSpec {
    pub fn new(nodes: Vec<NodeSpec>, edges: Vec<EdgeSpec>) -> Self {
        let unreliable = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.reliability < 1.0)
            .map(|(i, _)| i)
            .collect();
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            index.entry(n.id.clone()).or_insert(i);
        }
        NetworkSpec {
            nodes,
            edges,
            unreliable,
            index,
        }
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    /// Edge indices of the unreliable edges; position `b` is scenario bit `b`.
    pub fn unreliable_edges(&self) -> &[usize] {
        &self.unreliable
    }

    /// Scenario bit-length.
    pub fn k(&self) -> usize {
        self.unreliable.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, n)| n.kind == kind)
            .map(|(i, _)| i)
    }

    pub fn producers(&self) -> Vec<usize> {
        self.nodes_of_kind(NodeKind::Producer).collect()
    }

    pub fn consumers(&self) -> Vec<usize> {
        self.nodes_of_kind(NodeKind::Consumer).collect()
    }

    /// Copy of the network with modified edges (bit order is recomputed).
    pub fn with_edges(&self, edges: Vec<EdgeSpec>) -> Self {
        NetworkSpec::new(self.nodes.clone(), edges)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("network serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId(String),
    NegativeNodeCapacity(String),
    UnboundedCapacity(String),
    MissingPrices(String),
    UnexpectedPrices(String),
    NonFinitePrice(String),
    ReliabilityOutOfRange { edge: usize, reliability: f64 },
    NegativeEdgeCapacity { edge: usize },
    DanglingEdge { edge: usize, node: String },
    SelfLoop { edge: usize },
    NoProducer,
    NoConsumer,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate node id {id:?}"),
            Violation::NegativeNodeCapacity(id) => write!(f, "node {id:?} has negative or NaN capacity"),
            Violation::UnboundedCapacity(id) => {
                write!(f, "producer/consumer {id:?} needs a finite capacity")
            }
            Violation::MissingPrices(id) => write!(f, "node {id:?} must carry both stage prices"),
            Violation::UnexpectedPrices(id) => write!(f, "regular node {id:?} must not carry prices"),
            Violation::NonFinitePrice(id) => write!(f, "node {id:?} has a non-finite price"),
            Violation::ReliabilityOutOfRange { edge, reliability } => {
                write!(f, "edge {edge}: reliability {reliability} out of [0,1]")
            }
            Violation::NegativeEdgeCapacity { edge } => {
                write!(f, "edge {edge}: capacity must be finite and nonnegative")
            }
            Violation::DanglingEdge { edge, node } => write!(f, "edge {edge}: unknown node {node:?}"),
            Violation::SelfLoop { edge } => write!(f, "edge {edge}: self-loop"),
            Violation::NoProducer => write!(f, "network has no producer"),
            Violation::NoConsumer => write!(f, "network has no consumer"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Buying and returning earns `margin` per unit.
    ProducerArbitrage { id: String, margin: f64 },
    /// Selling and defaulting earns `margin` per unit.
    ConsumerArbitrage { id: String, margin: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ProducerArbitrage { id, margin } => write!(
                f,
                "producer {id:?}: refund exceeds purchase price, returning earns {margin} per unit"
            ),
            Warning::ConsumerArbitrage { id, margin } => write!(
                f,
                "consumer {id:?}: penalty below sale price, defaulting earns {margin} per unit"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_network(net: &NetworkSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = HashMap::new();
    for node in &net.nodes {
        if seen.insert(node.id.as_str(), ()).is_some() {
            report.violations.push(Violation::DuplicateId(node.id.clone()));
        }
        if node.capacity.is_nan() || node.capacity < 0.0 {
            report.violations.push(Violation::NegativeNodeCapacity(node.id.clone()));
        } else if node.kind != NodeKind::Regular && node.capacity.is_infinite() {
            report.violations.push(Violation::UnboundedCapacity(node.id.clone()));
        }
        match (node.kind, node.price_stage1, node.price_stage2) {
            (NodeKind::Regular, None, None) => {}
            (NodeKind::Regular, _, _) => report.violations.push(Violation::UnexpectedPrices(node.id.clone())),
            (kind, Some(p1), Some(p2)) => {
                if !p1.is_finite() || !p2.is_finite() {
                    report.violations.push(Violation::NonFinitePrice(node.id.clone()));
                } else if kind == NodeKind::Producer && p2 > p1 {
                    report.warnings.push(Warning::ProducerArbitrage {
                        id: node.id.clone(),
                        margin: p2 - p1,
                    });
                } else if kind == NodeKind::Consumer && p2 < p1 {
                    report.warnings.push(Warning::ConsumerArbitrage {
                        id: node.id.clone(),
                        margin: p1 - p2,
                    });
                }
            }
            _ => report.violations.push(Violation::MissingPrices(node.id.clone())),
        }
    }
    for (i, e) in net.edges.iter().enumerate() {
        if !(0.0..=1.0).contains(&e.reliability) {
            report.violations.push(Violation::ReliabilityOutOfRange {
                edge: i,
                reliability: e.reliability,
            });
        }
        if !(e.capacity >= 0.0 && e.capacity.is_finite()) {
            report.violations.push(Violation::NegativeEdgeCapacity { edge: i });
        }
        for end in [&e.from, &e.to] {
            if net.node_index(end).is_none() {
                report.violations.push(Violation::DanglingEdge {
                    edge: i,
                    node: end.clone(),
                });
            }
        }
        if e.from == e.to {
            report.violations.push(Violation::SelfLoop { edge: i });
        }
    }
    if net.nodes_of_kind(NodeKind::Producer).next().is_none() {
        report.violations.push(Violation::NoProducer);
    }
    if net.nodes_of_kind(NodeKind::Consumer).next().is_none() {
        report.violations.push(Violation::NoConsumer);
    }
    report
}

/// Rejects networks with violations, joining their messages.
pub(crate) fn ensure_valid(net: &NetworkSpec) -> crate::Result<()> {
    let report = validate_network(net);
    if report.is_ok() {
        Ok(())
    } else {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        Err(crate::Error::InvalidNetwork(msgs.join("; ")))
    }
}
