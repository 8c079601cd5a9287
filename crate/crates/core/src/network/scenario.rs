//! Failure scenarios: enumeration, sampling, and sample compression.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NetworkSpec;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Largest scenario bit-length [`enumerate_scenarios`] accepts by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// One realization of the unreliable edges: `bits[b]` is true when
/// unreliable edge `b` operates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureScenario {
    #[serde(serialize_with = "bits_to_str", deserialize_with = "bits_from_str")]
    pub bits: Vec<bool>,
    pub probability: f64,
}

impl FailureScenario {
    pub fn all_up(k: usize) -> Self {
        FailureScenario {
            bits: vec![true; k],
            probability: 1.0,
        }
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(s: &str, probability: f64) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::InvalidScenarios(format!("bad bit character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(FailureScenario { bits, probability })
    }

    /// True when every edge operating here also operates in `other`.
    pub fn is_below(&self, other: &FailureScenario) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

fn bits_to_str<S: Serializer>(bits: &[bool], s: S) -> std::result::Result<S::Ok, S::Error> {
    let text: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
    s.serialize_str(&text)
}

fn bits_from_str<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<bool>, D::Error> {
    let text = String::deserialize(d)?;
    text.chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            other => Err(serde::de::Error::custom(format!("bad bit character {other:?}"))),
        })
        .collect()
}

/// A distribution over failure scenarios.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSet {
    /// Edges fail independently with their own reliabilities.
    IndependentBernoulli { k: usize },
    /// An explicit list of distinct scenarios with probabilities summing to one.
    Explicit {
        k: usize,
        scenarios: Vec<FailureScenario>,
    },
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    k: usize,
    scenarios: Vec<FailureScenario>,
}

impl ScenarioSet {
    pub fn bernoulli(net: &NetworkSpec) -> Self {
        ScenarioSet::IndependentBernoulli { k: net.k() }
    }

    /// Builds an explicit set after checking lengths, distinctness, and that
    /// probabilities sum to one within 1e-9.
    pub fn explicit(k: usize, scenarios: Vec<FailureScenario>) -> Result<Self> {
        let set = ScenarioSet::Explicit { k, scenarios };
        set.validate()?;
        Ok(set)
    }

    pub fn single(scenario: FailureScenario) -> Self {
        let k = scenario.bits.len();
        ScenarioSet::Explicit {
            k,
            scenarios: vec![FailureScenario {
                probability: 1.0,
                ..scenario
            }],
        }
    }

    pub fn k(&self) -> usize {
        match self {
            ScenarioSet::IndependentBernoulli { k } | ScenarioSet::Explicit { k, .. } => *k,
        }
    }

    pub fn scenarios(&self) -> Option<&[FailureScenario]> {
        match self {
            ScenarioSet::Explicit { scenarios, .. } => Some(scenarios),
            ScenarioSet::IndependentBernoulli { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ScenarioSet::Explicit { k, scenarios } = self else {
            return Ok(());
        };
        if scenarios.is_empty() {
            return Err(Error::InvalidScenarios("no scenarios".into()));
        }
        let mut seen = HashMap::with_capacity(scenarios.len());
        let mut total = 0.0;
        for s in scenarios {
            if s.bits.len() != *k {
                return Err(Error::BitLength {
                    expected: *k,
                    found: s.bits.len(),
                });
            }
            if !(s.probability > 0.0 && s.probability <= 1.0) {
                return Err(Error::InvalidScenarios(format!(
                    "probability {} outside (0, 1]",
                    s.probability
                )));
            }
            if seen.insert(&s.bits, ()).is_some() {
                return Err(Error::InvalidScenarios(format!(
                    "duplicate scenario {}",
                    s.bit_string()
                )));
            }
            total += s.probability;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidScenarios(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// Resolves to an explicit list, enumerating Bernoulli spaces up to `cap` bits.
    pub fn materialize(&self, net: &NetworkSpec, cap: usize) -> Result<Vec<FailureScenario>> {
        if self.k() != net.k() {
            return Err(Error::BitLength {
                expected: net.k(),
                found: self.k(),
            });
        }
        match self {
            ScenarioSet::Explicit { scenarios, .. } => Ok(scenarios.clone()),
            ScenarioSet::IndependentBernoulli { .. } => match enumerate_scenarios(net, cap)? {
                ScenarioSet::Explicit { scenarios, .. } => Ok(scenarios),
                ScenarioSet::IndependentBernoulli { .. } => unreachable!(),
            },
        }
    }

    /// Serializes an explicit set as `{k, scenarios: [{bits, probability}]}`.
    pub fn to_json(&self) -> Result<String> {
        let ScenarioSet::Explicit { k, scenarios } = self else {
            return Err(Error::InvalidScenarios(
                "only explicit scenario sets have a file form".into(),
            ));
        };
        let file = ScenarioFile {
            k: *k,
            scenarios: scenarios.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        ScenarioSet::explicit(file.k, file.scenarios)
    }
}

/// Lists all `2^k` scenarios of the independent-failure model.
///
/// Scenario `m` has bit `b` set when bit `b` of `m` is set.
pub fn enumerate_scenarios(net: &NetworkSpec, cap: usize) -> Result<ScenarioSet> {
    let k = net.k();
    if k > cap {
        return Err(Error::CapExceeded { k, cap });
    }
    let rel: Vec<f64> = net
        .unreliable_edges()
        .iter()
        .map(|&e| net.edges()[e].reliability)
        .collect();
    let mut scenarios = Vec::with_capacity(1usize << k);
    for m in 0u64..(1u64 << k) {
        let bits: Vec<bool> = (0..k).map(|b| m >> b & 1 == 1).collect();
        let probability = bits
            .iter()
            .zip(&rel)
            .map(|(&up, &p)| if up { p } else { 1.0 - p })
            .product();
        if probability > 0.0 {
            scenarios.push(FailureScenario { bits, probability });
        }
    }
    Ok(ScenarioSet::Explicit { k, scenarios })
}

/// Draws one scenario; the returned weight is 1.
pub fn sample_scenario<R: Rng + ?Sized>(net: &NetworkSpec, rng: &mut R) -> FailureScenario {
    let bits = net
        .unreliable_edges()
        .iter()
        .map(|&e| rng.gen::<f64>() < net.edges()[e].reliability)
        .collect();
    FailureScenario {
        bits,
        probability: 1.0,
    }
}

/// Draws `n` scenarios from the stream seeded by `seed`.
pub fn sample_scenarios(net: &NetworkSpec, n: usize, seed: u64) -> Vec<FailureScenario> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| sample_scenario(net, &mut rng)).collect()
}

/// Distinct bit-vectors of `draws` in order of first appearance, with counts.
pub(crate) fn count_distinct(draws: &[FailureScenario]) -> Result<(Vec<Vec<bool>>, Vec<usize>)> {
    let Some(first) = draws.first() else {
        return Err(Error::EmptySample);
    };
    let k = first.bits.len();
    let mut index: HashMap<&[bool], usize> = HashMap::new();
    let mut distinct = Vec::new();
    let mut counts = Vec::new();
    for d in draws {
        if d.bits.len() != k {
            return Err(Error::BitLength {
                expected: k,
                found: d.bits.len(),
            });
        }
        match index.get(d.bits.as_slice()) {
            Some(&i) => counts[i] += 1,
            None => {
                index.insert(&d.bits, distinct.len());
                distinct.push(d.bits.clone());
                counts.push(1);
            }
        }
    }
    Ok((distinct, counts))
}

/// Collapses repeated draws into an empirical distribution with
/// probability `multiplicity / N`, ordered by first appearance.
pub fn compress_sample(draws: &[FailureScenario]) -> Result<ScenarioSet> {
    let (distinct, counts) = count_distinct(draws)?;
    let n = draws.len() as f64;
    let k = draws[0].bits.len();
    let scenarios = distinct
        .into_iter()
        .zip(counts)
        .map(|(bits, c)| FailureScenario {
            bits,
            probability: c as f64 / n,
        })
        .collect();
    Ok(ScenarioSet::Explicit { k, scenarios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeSpec, NodeSpec};
    use proptest::prelude::*;

    fn net_with(reliabilities: &[f64]) -> NetworkSpec {
        let edges = reliabilities
            .iter()
            .map(|&r| EdgeSpec::new("P", "C", 1.0, r))
            .collect();
        NetworkSpec::new(
            vec![
                NodeSpec::producer("P", 10.0, 1.0, 0.5),
                NodeSpec::consumer("C", 10.0, 2.0, 3.0),
            ],
            edges,
        )
    }

    fn probs(set: &ScenarioSet) -> HashMap<String, f64> {
        set.scenarios()
            .unwrap()
            .iter()
            .map(|s| (s.bit_string(), s.probability))
            .collect()
    }

    #[test]
    fn no_unreliable_edges_gives_one_certain_scenario() {
        let set = enumerate_scenarios(&net_with(&[1.0]), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(set.scenarios().unwrap(), &[FailureScenario::all_up(0)]);
    }

    #[test]
    fn two_edges_enumerate_product_probabilities() {
        let set = enumerate_scenarios(&net_with(&[0.9, 0.5]), DEFAULT_ENUMERATION_CAP).unwrap();
        let p = probs(&set);
        assert_eq!(p.len(), 4);
        for (bits, want) in [("11", 0.45), ("10", 0.45), ("01", 0.05), ("00", 0.05)] {
            assert!((p[bits] - want).abs() < 1e-15, "{bits}");
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let net = net_with(&[0.9; 22]);
        assert!(matches!(
            enumerate_scenarios(&net, 20),
            Err(Error::CapExceeded { k: 22, cap: 20 })
        ));
    }

    #[test]
    fn degenerate_reliabilities_sample_deterministically() {
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            assert!(sample_scenario(&net_with(&[1.0, 1.0]), &mut rng).bits.is_empty());
            assert_eq!(sample_scenario(&net_with(&[0.0, 0.0]), &mut rng).bits, vec![false, false]);
        }
    }

    #[test]
    fn sampled_frequency_matches_reliability() {
        let draws = sample_scenarios(&net_with(&[0.9]), 100_000, 11);
        let up = draws.iter().filter(|d| d.bits[0]).count() as f64 / 1e5;
        assert!((up - 0.9).abs() < 0.01, "{up}");
    }

    #[test]
    fn compression_counts_multiplicities() {
        let draws: Vec<FailureScenario> = ["11", "11", "01", "11"]
            .iter()
            .map(|s| FailureScenario::from_bit_string(s, 1.0).unwrap())
            .collect();
        let p = probs(&compress_sample(&draws).unwrap());
        assert_eq!(p.len(), 2);
        assert_eq!(p["11"], 0.75);
        assert_eq!(p["01"], 0.25);

        let same = vec![draws[0].clone(); 9];
        let set = compress_sample(&same).unwrap();
        assert_eq!(set.scenarios().unwrap().len(), 1);
        assert_eq!(set.scenarios().unwrap()[0].probability, 1.0);
    }

    #[test]
    fn compression_rejects_mixed_lengths_and_empty_input() {
        let draws = vec![
            FailureScenario::from_bit_string("11", 1.0).unwrap(),
            FailureScenario::from_bit_string("1", 1.0).unwrap(),
        ];
        assert!(matches!(compress_sample(&draws), Err(Error::BitLength { .. })));
        assert!(matches!(compress_sample(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn explicit_sets_are_validated() {
        let a = FailureScenario::from_bit_string("10", 0.5).unwrap();
        let b = FailureScenario::from_bit_string("01", 0.5).unwrap();
        assert!(ScenarioSet::explicit(2, vec![a.clone(), b.clone()]).is_ok());
        assert!(ScenarioSet::explicit(2, vec![a.clone(), a.clone()]).is_err());
        let short = FailureScenario::from_bit_string("01", 0.4).unwrap();
        assert!(ScenarioSet::explicit(2, vec![a, short]).is_err());
    }

    #[test]
    fn scenario_file_round_trips() {
        let set = enumerate_scenarios(&net_with(&[0.3, 0.77, 0.1]), 20).unwrap();
        let text = set.to_json().unwrap();
        assert!(text.contains("\"bits\": \"101\""));
        let back = ScenarioSet::from_json(&text).unwrap();
        assert_eq!(back, set);
    }

    proptest! {
        #[test]
        fn enumeration_sums_to_one(rel in prop::collection::vec(0.0f64..=1.0, 0..12)) {
            let set = enumerate_scenarios(&net_with(&rel), DEFAULT_ENUMERATION_CAP).unwrap();
            let total: f64 = set.scenarios().unwrap().iter().map(|s| s.probability).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn compressed_weighted_sum_equals_raw_average(
            seed in any::<u64>(),
            n in 1usize..400,
            coef in prop::collection::vec(-10.0f64..10.0, 4),
        ) {
            let net = net_with(&[0.7, 0.4, 0.9, 0.5]);
            let draws = sample_scenarios(&net, n, seed);
            let f = |bits: &[bool]| -> f64 {
                bits.iter().zip(&coef).map(|(&b, c)| if b { *c } else { c * c }).sum::<f64>().sin()
            };
            let raw = draws.iter().map(|d| f(&d.bits)).sum::<f64>() / n as f64;
            let set = compress_sample(&draws).unwrap();
            prop_assert!(set.scenarios().unwrap().len() <= n.min(16));
            let weighted: f64 = set.scenarios().unwrap().iter().map(|s| s.probability * f(&s.bits)).sum();
            prop_assert!((raw - weighted).abs() <= 1e-9);
        }
    }

    #[test]
    fn marginals_concentrate() {
        for seed in 0..5u64 {
            for step in 1..20 {
                let p = step as f64 * 0.05;
                let draws = sample_scenarios(&net_with(&[p]), 10_000, seed);
                let freq = draws.iter().filter(|d| d.bits[0]).count() as f64 / 1e4;
                let sd = (p * (1.0 - p) / 1e4).sqrt();
                assert!((freq - p).abs() <= 4.0 * sd, "seed {seed} p {p}: {freq}");
            }
        }
    }
}
