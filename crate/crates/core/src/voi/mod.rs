//! Myopic value of information: the gain in maximum expected utility from
//! observing one extra chance variable before a decision.

mod cooper;
mod direct;
mod expansion;
mod general;
mod report;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jtree::JtreeError;
use crate::model::{Evidence, IllegalObservation, InfluenceDiagram, ModelError, ObservationScenario, VarId};
use crate::solve::SolveError;

pub use cooper::{cooper_transform, voi_cooper, voi_cooper_with, CooperPath, CooperTransform};
pub use direct::{voi_non_intervening, DirectStrategy};
pub use expansion::{voi_table_expansion, voi_table_expansion_in, ExpansionVoi};
pub use general::{general_model, voi_general_model, voi_general_model_in, GeneralModel, GeneralVoi};
pub use report::{voi_report, CandidateReport, VoiQuery, VoiReport};

#[derive(Debug, Error)]
pub enum VoiError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Jtree(#[from] JtreeError),
    #[error("illegal observation: {0}")]
    Illegal(IllegalObservation),
    #[error("the method needs exactly one decision, the diagram has {0}")]
    NotSingleDecision(usize),
    #[error("decision `{0}` is intervening (it has chance children)")]
    Intervening(String),
    #[error("`{0}` is already in the evidence")]
    AlreadyObserved(String),
    #[error("`{candidate}` is a descendant of `{decision}`")]
    DescendantCandidate { candidate: String, decision: String },
    #[error("past observable `{0}` is not in the evidence; this method needs the full past")]
    PartialPast(String),
    #[error("evidence must cover exactly the past of D_{decision}: {detail}")]
    EvidenceOutsidePast { decision: usize, detail: String },
    #[error("source placement D_{j} must come after D_{i}")]
    SourceNotLater { i: usize, j: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Cooper,
    Expand,
    General,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Cooper => "cooper",
            Method::Expand => "expand",
            Method::General => "general",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Method::Direct),
            "cooper" => Ok(Method::Cooper),
            "expand" => Ok(Method::Expand),
            "general" => Ok(Method::General),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

/// Value of one candidate within a batch computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateValue {
    pub candidate: VarId,
    pub euo: f64,
    pub voi: f64,
}

/// Result of a single-decision batch method (direct or Cooper).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchVoi {
    pub decision: VarId,
    /// `max_d EU(d | e)`.
    pub baseline: f64,
    pub values: Vec<CandidateValue>,
    pub propagations: usize,
}

impl BatchVoi {
    pub fn voi_of(&self, x: VarId) -> Option<f64> {
        self.values.iter().find(|c| c.candidate == x).map(|c| c.voi)
    }
}

/// Shared checks of the single-decision methods: one decision, chance candidates
/// not yet observed, and every past observable present in `e`.
fn check_single_decision(
    id: &InfluenceDiagram,
    candidates: &[VarId],
    e: &Evidence,
) -> Result<VarId, VoiError> {
    if id.num_decisions() != 1 {
        return Err(VoiError::NotSingleDecision(id.num_decisions()));
    }
    let d = id.decisions()[0];
    if e.contains(d) {
        return Err(VoiError::AlreadyObserved(id.name(d).to_string()));
    }
    for &x in candidates {
        if id.is_decision(x) {
            return Err(ModelError::NotChance(id.name(x).to_string()).into());
        }
        if e.contains(x) {
            return Err(VoiError::AlreadyObserved(id.name(x).to_string()));
        }
    }
    check_full_past(id, &ObservationScenario::modeled(id), e)?;
    Ok(d)
}

/// Every chance variable placed in `I_0` must be observed.
pub(crate) fn check_full_past(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    e: &Evidence,
) -> Result<(), VoiError> {
    if let Some(v) = scenario.set(0).into_iter().find(|v| !e.contains(*v)) {
        return Err(VoiError::PartialPast(id.name(v).to_string()));
    }
    Ok(())
}

/// Chance utility parents other than `d`, ascending.
fn chance_utility_parents(id: &InfluenceDiagram, d: VarId) -> Vec<VarId> {
    id.utility_parents()
        .into_iter()
        .filter(|v| *v != d && !id.is_decision(*v))
        .collect()
}

/// Every configuration of `vars`, last variable fastest.
fn configurations(id: &InfluenceDiagram, vars: &[VarId]) -> Vec<Vec<usize>> {
    let total: usize = vars.iter().map(|v| id.cardinality(*v)).product();
    (0..total)
        .map(|mut i| {
            let mut cfg = vec![0; vars.len()];
            for (k, v) in vars.iter().enumerate().rev() {
                let c = id.cardinality(*v);
                cfg[k] = i % c;
                i /= c;
            }
            cfg
        })
        .collect()
}

/// `descendants(d) ∩ set`, as names.
fn descendants_in(id: &InfluenceDiagram, d: VarId, set: impl IntoIterator<Item = VarId>) -> Vec<VarId> {
    let desc: BTreeSet<VarId> = id.descendants(d);
    set.into_iter().filter(|v| desc.contains(v)).collect()
}
