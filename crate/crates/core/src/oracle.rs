//! Exhaustive evaluation of small influence diagrams.
//!
//! Shares no code with the potential algebra or the junction-tree solver: it
//! walks the observation-decision sequence literally, summing over chance
//! variables and maximizing over decisions, with joint probabilities computed
//! straight from the CPTs.

use thiserror::Error;

use crate::model::{Evidence, InfluenceDiagram, ModelError, ObservationScenario, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_total_configurations: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_total_configurations: 1 << 20,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("joint has {size} configurations, over the budget of {budget}")]
    BudgetExceeded { size: u64, budget: u64 },
    #[error("impossible evidence: P(e) = {0}")]
    ImpossibleEvidence(f64),
}

struct Walk<'a> {
    id: &'a InfluenceDiagram,
    sequence: Vec<VarId>,
    evidence: &'a Evidence,
    assignment: Vec<usize>,
}

impl Walk<'_> {
    /// Returns `(P(prefix, rest consistent with e), Σ P·U)` for the suffix from `depth`.
    fn value(&mut self, depth: usize) -> (f64, f64) {
        if depth == self.sequence.len() {
            let p = self.joint();
            if p == 0.0 {
                return (0.0, 0.0);
            }
            return (p, p * self.id.total_utility(&self.assignment));
        }
        let v = self.sequence[depth];
        let states: Vec<usize> = match self.evidence.get(v) {
            Some(s) => vec![s],
            None => (0..self.id.cardinality(v)).collect(),
        };
        if self.id.is_decision(v) {
            let mut best: Option<(f64, f64)> = None;
            let mut best_eu = f64::NEG_INFINITY;
            let mut any_mass = 0.0f64;
            for s in states {
                self.assignment[v.0] = s;
                let (m, w) = self.value(depth + 1);
                any_mass = any_mass.max(m);
                if m > 0.0 {
                    let eu = w / m;
                    if eu > best_eu {
                        best_eu = eu;
                        best = Some((m, w));
                    }
                }
            }
            best.unwrap_or((0.0, 0.0))
        } else {
            let (mut m, mut w) = (0.0, 0.0);
            for s in states {
                self.assignment[v.0] = s;
                let (mi, wi) = self.value(depth + 1);
                m += mi;
                w += wi;
            }
            (m, w)
        }
    }

    fn joint(&self) -> f64 {
        let mut p = 1.0;
        for cpt in self.id.cpts() {
            let k = self.id.cardinality(cpt.child);
            let row = cpt
                .parents
                .iter()
                .fold(0, |acc, v| acc * self.id.cardinality(*v) + self.assignment[v.0]);
            p *= cpt.values[row * k + self.assignment[cpt.child.0]];
            if p == 0.0 {
                break;
            }
        }
        p
    }
}

/// The scenario's sequence `I_0, D_1, I_1, ..., D_n, I_n`.
fn sequence(id: &InfluenceDiagram, scenario: &ObservationScenario) -> Vec<VarId> {
    let n = id.num_decisions();
    let mut out = Vec::with_capacity(id.num_variables());
    for k in 0..=n {
        if k > 0 {
            out.push(id.decisions()[k - 1]);
        }
        out.extend(scenario.set(k));
    }
    out
}

/// Maximum expected utility given `e`, by exhaustive recursion.
pub fn oracle_meu(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    e: &Evidence,
) -> Result<f64, OracleError> {
    oracle_meu_with(id, scenario, e, OracleBudget::default())
}

pub fn oracle_meu_with(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    e: &Evidence,
    budget: OracleBudget,
) -> Result<f64, OracleError> {
    scenario.validate(id)?;
    let size = id
        .var_ids()
        .try_fold(1u64, |acc, v| acc.checked_mul(id.cardinality(v) as u64))
        .unwrap_or(u64::MAX);
    if size > budget.max_total_configurations {
        return Err(OracleError::BudgetExceeded {
            size,
            budget: budget.max_total_configurations,
        });
    }
    let mut walk = Walk {
        id,
        sequence: sequence(id, scenario),
        evidence: e,
        assignment: vec![0; id.num_variables()],
    };
    let (m, w) = walk.value(0);
    if m <= 1e-12 {
        return Err(OracleError::ImpossibleEvidence(m));
    }
    Ok(w / m)
}

/// `MEU(x ∈ I_{i-1}) − MEU(x ∈ I_{j-1})`; `j = None` places `x` in `I_n`.
pub fn oracle_voi(
    id: &InfluenceDiagram,
    x: VarId,
    i: usize,
    j: Option<usize>,
    e: &Evidence,
) -> Result<f64, OracleError> {
    id.decision(i)?;
    let base = ObservationScenario::modeled(id);
    let late_at = j.map_or(id.num_decisions(), |j| j - 1);
    if late_at == i - 1 {
        return Ok(0.0);
    }
    let early = base.with_placement(id, x, i - 1)?;
    let late = base.with_placement(id, x, late_at)?;
    Ok(oracle_meu(id, &early, e)? - oracle_meu(id, &late, e)?)
}
