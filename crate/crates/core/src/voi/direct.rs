//! Direct propagation for a single non-intervening decision.

use super::{
    check_single_decision, chance_utility_parents, configurations, BatchVoi, CandidateValue,
    VoiError,
};
use crate::model::{Evidence, InfluenceDiagram, VarId};
use crate::solve::{InferenceTree, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectStrategy {
    /// One propagation per candidate state, reading `P(H | a, e)`.
    PerCandidateState,
    /// One propagation per configuration of `H`, reading every `P(A | h, e)`.
    PerUtilityConfiguration,
}

/// `EU(d | ·)` for every action of `d`, given a distribution over `H`.
fn expected_utilities(
    id: &InfluenceDiagram,
    d: VarId,
    h: &[VarId],
    h_configs: &[Vec<usize>],
    p_h: &[f64],
) -> Vec<f64> {
    let mut assignment = vec![0; id.num_variables()];
    (0..id.cardinality(d))
        .map(|a| {
            assignment[d.0] = a;
            h_configs
                .iter()
                .zip(p_h)
                .filter(|(_, p)| **p > 0.0)
                .map(|(cfg, p)| {
                    for (v, s) in h.iter().zip(cfg) {
                        assignment[v.0] = *s;
                    }
                    p * id.total_utility(&assignment)
                })
                .sum()
        })
        .collect()
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Treats a vanished probability in a conditioning branch as a zero-weight term.
fn skip_impossible<T>(r: Result<T, SolveError>) -> Result<Option<T>, VoiError> {
    match r {
        Ok(t) => Ok(Some(t)),
        Err(SolveError::ImpossibleEvidence(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// VOI of each candidate for the single, non-intervening decision of `id`.
///
/// Picks whichever of the two propagation strategies needs fewer propagations;
/// the total is at most `min(|Ω_H|, Σ|A|) + 1`.
pub fn voi_non_intervening(
    id: &InfluenceDiagram,
    candidates: &[VarId],
    e: &Evidence,
) -> Result<(BatchVoi, DirectStrategy), VoiError> {
    let d = check_single_decision(id, candidates, e)?;
    if !id.children(d).is_empty() {
        return Err(VoiError::Intervening(id.name(d).to_string()));
    }
    let h = chance_utility_parents(id, d);
    let h_configs = configurations(id, &h);
    let joint = if h.is_empty() { vec![] } else { vec![h.clone()] };
    let engine = InferenceTree::new(id, &joint)?;

    let base = engine.calibrate(e)?;
    let mut propagations = 1;
    let p_h = base.joint(id, &h)?.values;
    let baseline = max(&expected_utilities(id, d, &h, &h_configs, &p_h));
    let p_a: Vec<Vec<f64>> = candidates
        .iter()
        .map(|a| base.joint(id, &[*a]).map(|p| p.values))
        .collect::<Result<_, _>>()?;

    let sum_states: usize = candidates.iter().map(|a| id.cardinality(*a)).sum();
    let strategy = if sum_states <= h_configs.len() {
        DirectStrategy::PerCandidateState
    } else {
        DirectStrategy::PerUtilityConfiguration
    };

    let mut euo = vec![0.0; candidates.len()];
    match strategy {
        DirectStrategy::PerCandidateState => {
            for (k, &a) in candidates.iter().enumerate() {
                for (s, &pa) in p_a[k].iter().enumerate() {
                    if pa <= 0.0 {
                        continue;
                    }
                    propagations += 1;
                    let Some(cal) = skip_impossible(engine.calibrate(&e.with(id, a, s)?))? else {
                        continue;
                    };
                    let p_h_a = cal.joint(id, &h)?.values;
                    euo[k] += pa * max(&expected_utilities(id, d, &h, &h_configs, &p_h_a));
                }
            }
        }
        DirectStrategy::PerUtilityConfiguration => {
            // P(a | h, e) for every candidate and h
            let mut p_a_h: Vec<Vec<Vec<f64>>> = vec![Vec::new(); candidates.len()];
            for (hi, cfg) in h_configs.iter().enumerate() {
                let mut cond: Vec<Vec<f64>> = candidates
                    .iter()
                    .map(|a| vec![0.0; id.cardinality(*a)])
                    .collect();
                if p_h[hi] > 0.0 {
                    let mut eh = e.clone();
                    let mut consistent = true;
                    for (v, s) in h.iter().zip(cfg) {
                        match eh.get(*v) {
                            Some(t) if t != *s => consistent = false,
                            Some(_) => {}
                            None => eh.assign_index(id, *v, *s)?,
                        }
                    }
                    if consistent {
                        propagations += 1;
                        if let Some(cal) = skip_impossible(engine.calibrate(&eh))? {
                            for (k, a) in candidates.iter().enumerate() {
                                cond[k] = cal.joint(id, &[*a])?.values;
                            }
                        }
                    }
                }
                for (k, c) in cond.into_iter().enumerate() {
                    p_a_h[k].push(c);
                }
            }
            for (k, &a) in candidates.iter().enumerate() {
                for s in 0..id.cardinality(a) {
                    // Σ_h P(a | h, e) P(h | e) U(d, h) = P(a | e) · EU(d | a, e)
                    let joint_w: Vec<f64> = (0..h_configs.len())
                        .map(|hi| p_a_h[k][hi][s] * p_h[hi])
                        .collect();
                    if p_a[k][s] <= 0.0 {
                        continue;
                    }
                    euo[k] += max(&expected_utilities(id, d, &h, &h_configs, &joint_w));
                }
            }
        }
    }

    let values = candidates
        .iter()
        .zip(euo)
        .map(|(&a, euo)| CandidateValue {
            candidate: a,
            euo,
            voi: euo - baseline,
        })
        .collect();
    Ok((
        BatchVoi {
            decision: d,
            baseline,
            values,
            propagations,
        },
        strategy,
    ))
}
