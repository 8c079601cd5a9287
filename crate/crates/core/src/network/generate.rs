use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EdgeSpec, NetworkSpec, NodeSpec};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Parameters of the layered random network generator. Ranges are
/// inclusive-exclusive uniform draws; prices are drawn so that refunds stay
/// below purchase prices and penalties above sale prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub n_producers: usize,
    pub n_consumers: usize,
    pub n_regular: usize,
    pub n_edges: usize,
    pub n_unreliable: usize,
    pub edge_capacity: (f64, f64),
    pub node_capacity: (f64, f64),
    /// Throughput limit for regular nodes; `None` leaves them unbounded.
    pub regular_capacity: Option<(f64, f64)>,
    pub purchase_price: (f64, f64),
    pub sale_price: (f64, f64),
    /// Producer refund as a fraction of its purchase price.
    pub refund_ratio: (f64, f64),
    /// Consumer penalty as a multiple of its sale price.
    pub penalty_ratio: (f64, f64),
    pub reliability: (f64, f64),
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n_producers: 3,
            n_consumers: 3,
            n_regular: 4,
            n_edges: 16,
            n_unreliable: 8,
            edge_capacity: (5.0, 15.0),
            node_capacity: (10.0, 20.0),
            regular_capacity: None,
            purchase_price: (1.0, 2.0),
            sale_price: (3.0, 4.0),
            refund_ratio: (0.2, 0.6),
            penalty_ratio: (1.5, 2.5),
            reliability: (0.6, 0.95),
        }
    }
}

fn draw<R: Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    let v = if range.1 > range.0 {
        rng.gen_range(range.0..range.1)
    } else {
        range.0
    };
    // two decimals keep generated files readable
    (v * 100.0).round() / 100.0
}

fn check_range(name: &str, r: (f64, f64), min: f64, max: f64) -> Result<()> {
    if !(r.0 <= r.1 && r.0 >= min && r.1 <= max) {
        return Err(Error::InfeasibleParams(format!(
            "{name} range [{}, {}] must be ordered within [{min}, {max}]",
            r.0, r.1
        )));
    }
    Ok(())
}

/// Builds a layered network (producers → regular → consumers, plus optional
/// regular→regular and direct producer→consumer edges). Every producer and
/// consumer is attached, and every regular node has an inbound and an
/// outbound edge. The result is a pure function of `(params, seed)`.
pub fn generate_random_network(params: &GeneratorParams, seed: u64) -> Result<NetworkSpec> {
    let p = params;
    if p.n_producers == 0 || p.n_consumers == 0 {
        return Err(Error::InfeasibleParams(
            "need at least one producer and one consumer".into(),
        ));
    }
    if p.n_unreliable > p.n_edges {
        return Err(Error::InfeasibleParams(format!(
            "{} unreliable edges requested but only {} edges",
            p.n_unreliable, p.n_edges
        )));
    }
    check_range("edge capacity", p.edge_capacity, 0.0, f64::MAX)?;
    check_range("node capacity", p.node_capacity, 0.0, f64::MAX)?;
    if let Some(r) = p.regular_capacity {
        check_range("regular capacity", r, 0.0, f64::MAX)?;
    }
    check_range("purchase price", p.purchase_price, f64::MIN, f64::MAX)?;
    check_range("sale price", p.sale_price, f64::MIN, f64::MAX)?;
    check_range("refund ratio", p.refund_ratio, 0.0, 1.0)?;
    check_range("penalty ratio", p.penalty_ratio, 1.0, f64::MAX)?;
    check_range("reliability", p.reliability, 0.0, 1.0)?;

    let mut rng = rng_from_seed(seed);
    let producers: Vec<String> = (1..=p.n_producers).map(|i| format!("P{i}")).collect();
    let consumers: Vec<String> = (1..=p.n_consumers).map(|i| format!("C{i}")).collect();
    let regular: Vec<String> = (1..=p.n_regular).map(|i| format!("R{i}")).collect();

    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut used: HashSet<(String, String)> = HashSet::new();
    let mut push = |pairs: &mut Vec<(String, String)>, a: &String, b: &String| {
        if used.insert((a.clone(), b.clone())) {
            pairs.push((a.clone(), b.clone()));
        }
    };
    if regular.is_empty() {
        for i in 0..p.n_producers.max(p.n_consumers) {
            push(&mut pairs, &producers[i % p.n_producers], &consumers[i % p.n_consumers]);
        }
    } else {
        let r = regular.len();
        let mut has_in = vec![false; r];
        let mut has_out = vec![false; r];
        for (i, prod) in producers.iter().enumerate() {
            push(&mut pairs, prod, &regular[i % r]);
            has_in[i % r] = true;
        }
        for (i, cons) in consumers.iter().enumerate() {
            push(&mut pairs, &regular[i % r], cons);
            has_out[i % r] = true;
        }
        for i in 0..r {
            if !has_in[i] {
                push(&mut pairs, &producers[i % p.n_producers], &regular[i]);
            }
            if !has_out[i] {
                push(&mut pairs, &regular[i], &consumers[i % p.n_consumers]);
            }
        }
    }
    if pairs.len() > p.n_edges {
        return Err(Error::InfeasibleParams(format!(
            "{} edges requested but {} are needed to connect every node",
            p.n_edges,
            pairs.len()
        )));
    }

    let mut pool: Vec<(String, String)> = Vec::new();
    for a in &producers {
        for b in regular.iter().chain(&consumers) {
            pool.push((a.clone(), b.clone()));
        }
    }
    for (i, a) in regular.iter().enumerate() {
        for b in regular[i + 1..].iter().chain(&consumers) {
            pool.push((a.clone(), b.clone()));
        }
    }
    pool.retain(|pair| !used.contains(pair));
    pool.shuffle(&mut rng);
    let extra = p.n_edges - pairs.len();
    if extra > pool.len() {
        return Err(Error::InfeasibleParams(format!(
            "only {} distinct edges fit this layout, {} requested",
            pairs.len() + pool.len(),
            p.n_edges
        )));
    }
    pairs.extend(pool.into_iter().take(extra));

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng);
    let mut unreliable = vec![false; pairs.len()];
    for &i in order.iter().take(p.n_unreliable) {
        unreliable[i] = true;
    }
    let edges: Vec<EdgeSpec> = pairs
        .into_iter()
        .zip(unreliable)
        .map(|((from, to), unrel)| {
            let capacity = draw(&mut rng, p.edge_capacity);
            let reliability = if unrel {
                // reliability must stay strictly below one to count as unreliable
                draw(&mut rng, p.reliability).min(0.99)
            } else {
                1.0
            };
            EdgeSpec::new(from, to, capacity, reliability)
        })
        .collect();

    let mut nodes = Vec::new();
    for id in producers {
        let purchase = draw(&mut rng, p.purchase_price);
        let refund = (purchase * draw(&mut rng, p.refund_ratio) * 100.0).round() / 100.0;
        let cap = draw(&mut rng, p.node_capacity);
        nodes.push(NodeSpec::producer(id, cap, purchase, refund.min(purchase)));
    }
    for id in regular {
        let cap = match p.regular_capacity {
            Some(r) => draw(&mut rng, r),
            None => f64::INFINITY,
        };
        nodes.push(NodeSpec::regular(id, cap));
    }
    for id in consumers {
        let sale = draw(&mut rng, p.sale_price);
        let penalty = (sale * draw(&mut rng, p.penalty_ratio) * 100.0).round() / 100.0;
        let cap = draw(&mut rng, p.node_capacity);
        nodes.push(NodeSpec::consumer(id, cap, sale, penalty.max(sale)));
    }
    Ok(NetworkSpec::new(nodes, edges))
}
