//! One VOI report over a candidate set, with per-candidate method selection.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    chance_utility_parents, check_full_past, configurations, voi_cooper, voi_general_model_in,
    voi_non_intervening, voi_table_expansion_in, BatchVoi, Method, VoiError,
};
use crate::model::{Evidence, InfluenceDiagram, ObservationScenario, VarId};
use crate::solve::solve_meu;

/// Above this many propagations the direct method yields to Cooper.
pub const DIRECT_THRESHOLD: usize = 64;

#[derive(Debug, Clone)]
pub struct VoiQuery {
    /// Index `i` of the decision `D_i`.
    pub decision: usize,
    pub candidates: Vec<VarId>,
    pub evidence: Evidence,
    /// `None` means the modeled placement.
    pub scenario: Option<ObservationScenario>,
    /// Per-candidate source `j`; `Some(None)` is `j = ∞`. Missing entries use
    /// the candidate's placement in the scenario.
    pub sources: BTreeMap<VarId, Option<usize>>,
    /// `None` selects automatically.
    pub method: Option<Method>,
}

impl VoiQuery {
    pub fn new(decision: usize, candidates: Vec<VarId>, evidence: Evidence) -> Self {
        VoiQuery {
            decision,
            candidates,
            evidence,
            scenario: None,
            sources: BTreeMap::new(),
            method: None,
        }
    }

    pub fn with_method(mut self, method: Option<Method>) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateReport {
    #[serde(skip)]
    pub variable: VarId,
    pub name: String,
    pub legal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub euo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voi: Option<f64>,
    /// Propagations of the computation that produced this value; batch
    /// methods share one count between their candidates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propagations: Option<usize>,
    /// A legal candidate whose computation failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CandidateReport {
    fn new(id: &InfluenceDiagram, x: VarId) -> Self {
        CandidateReport {
            variable: x,
            name: id.name(x).to_string(),
            legal: true,
            reason: None,
            method: None,
            euo: None,
            voi: None,
            propagations: None,
            error: None,
        }
    }

    fn illegal(mut self, reason: String) -> Self {
        self.legal = false;
        self.reason = Some(reason);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoiReport {
    pub decision: String,
    /// MEU given the evidence, without any extra observation.
    pub baseline: f64,
    /// Every collect performed for this report, the baseline included.
    pub propagations: usize,
    /// Descending VOI, then name; illegal and failed candidates last.
    pub candidates: Vec<CandidateReport>,
}

impl VoiReport {
    pub fn candidate(&self, name: &str) -> Option<&CandidateReport> {
        self.candidates.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Computes the myopic VOI of every candidate for `D_i`.
///
/// Only a failing baseline (bad decision index, evidence outside the past,
/// impossible evidence) is an error; per-candidate failures are reported inline.
pub fn voi_report(id: &InfluenceDiagram, query: &VoiQuery) -> Result<VoiReport, VoiError> {
    let i = query.decision;
    let d = id.decision(i)?;
    let e = &query.evidence;
    let modeled = ObservationScenario::modeled(id);
    // observations in `e` happened by now, whatever their modeled placement
    let base = query.scenario.clone().unwrap_or_else(|| modeled.clone());
    let scenario = base.observed_at(id, e, i - 1)?;
    let baseline = solve_meu(id, &scenario, e)?.meu;
    let mut propagations = 1;

    let mut reports = Vec::new();
    let mut legal = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &x in &query.candidates {
        if !seen.insert(x) {
            continue;
        }
        let report = CandidateReport::new(id, x);
        if id.is_decision(x) {
            reports.push(report.illegal(format!("`{}` is a decision", id.name(x))));
        } else if e.contains(x) {
            reports.push(report.illegal(format!("`{}` is already observed", id.name(x))));
        } else if let Err(illegal) = id.observation_legal(x, i - 1)? {
            reports.push(report.illegal(illegal.to_string()));
        } else if scenario.placement(x).is_some_and(|p| p < i - 1) {
            reports.push(report.illegal(format!(
                "`{}` is already observable before D_{i}",
                id.name(x)
            )));
        } else {
            legal.push(report);
        }
    }

    let source = |x: VarId| -> Option<usize> {
        query.sources.get(&x).copied().unwrap_or_else(|| {
            let p = scenario.placement(x).unwrap_or(id.num_decisions());
            (p < id.num_decisions()).then_some(p + 1)
        })
    };
    let methods = select_methods(id, query, &scenario, &modeled, d, &legal, &source);

    // batch methods first, one call per method
    for batch_method in [Method::Direct, Method::Cooper] {
        let group: Vec<VarId> = legal
            .iter()
            .filter(|c| methods[&c.variable] == batch_method)
            .map(|c| c.variable)
            .collect();
        if group.is_empty() {
            continue;
        }
        let result: Result<BatchVoi, VoiError> = match batch_method {
            Method::Direct => voi_non_intervening(id, &group, e).map(|(b, _)| b),
            _ => voi_cooper(id, &group, e),
        };
        if let Ok(b) = &result {
            propagations += b.propagations;
        }
        for c in legal.iter_mut().filter(|c| group.contains(&c.variable)) {
            c.method = Some(batch_method);
            match &result {
                Ok(b) => {
                    let voi = b.voi_of(c.variable).expect("candidate in batch");
                    c.voi = Some(voi);
                    c.euo = Some(baseline + voi);
                    c.propagations = Some(b.propagations);
                }
                Err(err) => c.error = Some(err.to_string()),
            }
        }
    }
    for c in legal.iter_mut() {
        let m = methods[&c.variable];
        let x = c.variable;
        let outcome = match m {
            Method::Expand => voi_table_expansion_in(id, &scenario, x, i, source(x), e)
                .map(|r| (r.voi, r.propagations)),
            Method::General => {
                voi_general_model_in(id, &scenario, x, i, e).map(|r| (r.voi, r.propagations))
            }
            _ => continue,
        };
        c.method = Some(m);
        match outcome {
            Ok((voi, p)) => {
                propagations += p;
                c.voi = Some(voi);
                c.euo = Some(baseline + voi);
                c.propagations = Some(p);
            }
            Err(err) => c.error = Some(err.to_string()),
        }
    }

    let mut candidates: Vec<CandidateReport> = legal;
    candidates.sort_by(|a, b| match (a.voi, b.voi) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.name.cmp(&b.name)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.name.cmp(&b.name),
    });
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    candidates.extend(reports);
    Ok(VoiReport {
        decision: id.name(d).to_string(),
        baseline,
        propagations,
        candidates,
    })
}

/// Direct when a single non-intervening decision has a full past and the
/// direct method needs few propagations, Cooper for other single-decision
/// queries, table expansion for everything else.
fn select_methods(
    id: &InfluenceDiagram,
    query: &VoiQuery,
    scenario: &ObservationScenario,
    modeled: &ObservationScenario,
    d: VarId,
    legal: &[CandidateReport],
    source: &dyn Fn(VarId) -> Option<usize>,
) -> BTreeMap<VarId, Method> {
    if let Some(m) = query.method {
        return legal.iter().map(|c| (c.variable, m)).collect();
    }
    let single = id.num_decisions() == 1
        && query.scenario.as_ref().is_none_or(|s| s == modeled)
        && check_full_past(id, scenario, &query.evidence).is_ok();
    let desc = id.descendants(d);
    let batchable: Vec<VarId> = legal
        .iter()
        .map(|c| c.variable)
        .filter(|x| single && source(*x).is_none() && !desc.contains(x))
        .collect();
    let batch = if id.children(d).is_empty() {
        let h = chance_utility_parents(id, d);
        let omega_h = configurations(id, &h).len();
        let sum_states: usize = batchable.iter().map(|x| id.cardinality(*x)).sum();
        if omega_h.min(sum_states) <= DIRECT_THRESHOLD {
            Method::Direct
        } else {
            Method::Cooper
        }
    } else {
        Method::Cooper
    };
    legal
        .iter()
        .map(|c| {
            let m = if batchable.contains(&c.variable) { batch } else { Method::Expand };
            (c.variable, m)
        })
        .collect()
}
