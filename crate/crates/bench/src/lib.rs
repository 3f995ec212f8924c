//! Workloads shared by the benchmarks.

use idvoi::synth::{random_diagram, SynthConfig};
use idvoi::{Evidence, InfluenceDiagram, ObservationScenario, VarId};

/// Random diagrams with `chance` binary chance variables and `decisions` decisions.
pub fn diagrams(chance: usize, decisions: usize, count: u64) -> Vec<InfluenceDiagram> {
    let config = SynthConfig {
        min_chance: chance,
        max_chance: chance,
        min_decisions: decisions,
        max_decisions: decisions,
        ..SynthConfig::default()
    };
    (0..count).map(|seed| random_diagram(&config, seed)).collect()
}

/// Single non-intervening decision diagrams, the domain of the batch methods.
pub fn single_decision(chance: usize, count: u64) -> Vec<InfluenceDiagram> {
    let config = SynthConfig {
        min_chance: chance,
        max_chance: chance,
        ..SynthConfig::single_non_intervening()
    };
    (0..count).map(|seed| random_diagram(&config, seed)).collect()
}

/// Candidates that can legally move to just before `D_i`, with `D_1..D_{i-1}`
/// committed to their first action and, for `i = 1`, `I_0` fully observed.
pub fn query(id: &InfluenceDiagram, i: usize) -> (Vec<VarId>, Evidence) {
    let mut e = Evidence::new();
    for k in 1..i {
        e.assign_index(id, id.decision(k).unwrap(), 0).unwrap();
    }
    if i == 1 {
        for x in ObservationScenario::modeled(id).set(0) {
            e.assign_index(id, x, 0).unwrap();
        }
    }
    let candidates = id
        .var_ids()
        .filter(|&x| !id.is_decision(x))
        .filter(|&x| id.modeled_placement(x).is_some_and(|p| p > i - 1))
        .filter(|&x| matches!(id.observation_legal(x, i - 1), Ok(Ok(()))))
        .collect();
    (candidates, e)
}
