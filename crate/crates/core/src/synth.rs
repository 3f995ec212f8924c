//! Random small influence diagrams for property tests and benchmarks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    CptDocument, InfluenceDiagram, ModelDocument, UtilityDocument, Variable, VariableKind,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub min_chance: usize,
    pub max_chance: usize,
    pub min_decisions: usize,
    pub max_decisions: usize,
    pub max_parents: usize,
    pub max_utility_parents: usize,
    pub states: usize,
    /// Decisions get no chance children.
    pub non_intervening: bool,
    pub utility_range: (f64, f64),
    /// Probability that a chance variable gets an explicit, earlier lower bound.
    pub lower_bound_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            min_chance: 2,
            max_chance: 6,
            min_decisions: 1,
            max_decisions: 2,
            max_parents: 2,
            max_utility_parents: 3,
            states: 2,
            non_intervening: false,
            utility_range: (0.0, 100.0),
            lower_bound_rate: 0.5,
        }
    }
}

impl SynthConfig {
    /// One non-intervening decision, as required by the direct method.
    pub fn single_non_intervening() -> Self {
        SynthConfig {
            min_decisions: 1,
            max_decisions: 1,
            non_intervening: true,
            ..Self::default()
        }
    }
}

enum Node {
    Chance(usize),
    Decision(usize),
}

/// Generates a valid diagram from `seed`. Deterministic per `(config, seed)`.
pub fn random_diagram(config: &SynthConfig, seed: u64) -> InfluenceDiagram {
    InfluenceDiagram::from_document(&random_document(config, seed))
        .expect("generated documents are valid")
}

pub fn random_document(config: &SynthConfig, seed: u64) -> ModelDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = rng.random_range(config.min_chance..=config.max_chance);
    let nd = rng.random_range(config.min_decisions..=config.max_decisions);
    let chance: Vec<String> = (1..=nc).map(|i| format!("X{i}")).collect();
    let decisions: Vec<String> = (1..=nd).map(|i| format!("D_{i}")).collect();
    let states = |prefix: &str| -> Vec<String> {
        (0..config.states).map(|s| format!("{prefix}{s}")).collect()
    };

    // causal order: decisions appear in their own order, chance variables
    // interleaved at random
    let mut order: Vec<Node> = (0..nc).map(Node::Chance).collect();
    order.shuffle(&mut rng);
    let mut slots: Vec<usize> = (0..nd).map(|_| rng.random_range(0..=order.len())).collect();
    slots.sort_unstable();
    for (k, at) in slots.into_iter().enumerate().rev() {
        order.insert(at, Node::Decision(k));
    }

    let mut parents: Vec<Vec<String>> = vec![Vec::new(); nc];
    let mut dec_anc: Vec<usize> = vec![0; nc];
    for (pos, node) in order.iter().enumerate() {
        let Node::Chance(c) = *node else { continue };
        let mut pool: Vec<&Node> = order[..pos]
            .iter()
            .filter(|n| !(config.non_intervening && matches!(n, Node::Decision(_))))
            .collect();
        pool.shuffle(&mut rng);
        let k = rng.random_range(0..=config.max_parents.min(pool.len()));
        for n in &pool[..k] {
            match **n {
                Node::Chance(p) => {
                    parents[c].push(chance[p].clone());
                    dec_anc[c] = dec_anc[c].max(dec_anc[p]);
                }
                Node::Decision(d) => {
                    parents[c].push(decisions[d].clone());
                    dec_anc[c] = dec_anc[c].max(d + 1);
                }
            }
        }
    }

    let mut info: Vec<Vec<String>> = vec![Vec::new(); nd + 1];
    let mut lower = BTreeMap::new();
    for c in 0..nc {
        let m = rng.random_range(dec_anc[c]..=nd);
        info[m].push(chance[c].clone());
        if m > dec_anc[c] && rng.random_bool(config.lower_bound_rate) {
            lower.insert(chance[c].clone(), rng.random_range(dec_anc[c]..m));
        }
    }

    let card = config.states;
    let cpts = (0..nc)
        .map(|c| {
            let rows = card.pow(parents[c].len() as u32);
            let values = (0..rows)
                .flat_map(|_| {
                    let raw: Vec<f64> = (0..card).map(|_| rng.random_range(0.05..1.0)).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(move |x| x / s)
                })
                .collect();
            CptDocument {
                child: chance[c].clone(),
                parents: parents[c].clone(),
                values,
            }
        })
        .collect();

    let mut all: Vec<String> = chance.iter().chain(&decisions).cloned().collect();
    all.shuffle(&mut rng);
    let ku = rng.random_range(1..=config.max_utility_parents.min(all.len()));
    let mut uparents: Vec<String> = all[..ku].to_vec();
    // keep the decision relevant for the non-intervening case
    if config.non_intervening && nd == 1 && !uparents.contains(&decisions[0]) {
        if uparents.len() == config.max_utility_parents {
            uparents.pop();
        }
        uparents.push(decisions[0].clone());
    }
    let (lo, hi) = config.utility_range;
    let uvalues = (0..card.pow(uparents.len() as u32))
        .map(|_| rng.random_range(lo..=hi))
        .collect();

    let mut variables: Vec<Variable> = chance
        .iter()
        .map(|n| Variable {
            name: n.clone(),
            kind: VariableKind::Chance,
            states: states("s"),
        })
        .collect();
    variables.extend(decisions.iter().map(|n| Variable {
        name: n.clone(),
        kind: VariableKind::Decision,
        states: states("a"),
    }));

    ModelDocument {
        variables,
        cpts,
        utilities: vec![UtilityDocument {
            name: "U".into(),
            parents: uparents,
            values: uvalues,
        }],
        decision_order: decisions,
        information_sets: info,
        observation_lower_bounds: lower,
    }
}
