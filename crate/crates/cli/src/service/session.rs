//! Interactive decision sessions: an append-only walk through the
//! observation-decision sequence of one model.

use idvoi::potentials::strictly_better;
use idvoi::solve::{solve_meu, InferenceTree, SolveError};
use idvoi::voi::{voi_report, VoiQuery, VoiReport};
use idvoi::{Evidence, InfluenceDiagram, ObservationScenario, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Observe { variable: String, state: String },
    Decide { decision: String, action: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    /// Malformed request: unknown variable, state or kind mismatch.
    #[error("{0}")]
    BadRequest(String),
    /// Well-formed, but not allowed at this point of the sequence.
    #[error("{0}")]
    Conflict(String),
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub model_id: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    /// Index of the pending decision; `n + 1` once every decision is committed.
    pub stage: usize,
    pub evidence: Evidence,
    pub log: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PendingDecision {
    pub name: String,
    pub index: usize,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub variable: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub name: String,
    pub states: Vec<String>,
    /// Observation interval `[l, m]` as information-set indices.
    pub interval: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub decision: String,
    pub index: usize,
    pub actions: Vec<String>,
    /// `EU(d' | evidence)` per action, in action order.
    pub expected_utilities: Vec<f64>,
    pub best_action: String,
    pub best_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub id: String,
    pub model_id: String,
    pub created: u64,
    pub stage: usize,
    pub complete: bool,
    pub pending_decision: Option<PendingDecision>,
    /// In the order the steps were taken.
    pub evidence: Vec<Assignment>,
    /// Chance variables that may be observed now.
    pub candidates: Vec<Candidate>,
}

impl Session {
    pub fn new(id: String, model_id: String, created: u64) -> Self {
        Session {
            id,
            model_id,
            created,
            stage: 1,
            evidence: Evidence::new(),
            log: Vec::new(),
        }
    }

    pub fn pending(&self, id: &InfluenceDiagram) -> Option<VarId> {
        id.decision(self.stage).ok()
    }

    /// Information set being observed right now.
    fn target(&self) -> usize {
        self.stage - 1
    }

    /// Legal observations at this stage.
    pub fn candidates(&self, id: &InfluenceDiagram) -> Vec<VarId> {
        id.var_ids()
            .filter(|&v| !id.is_decision(v) && !self.evidence.contains(v))
            .filter(|&v| matches!(id.observation_legal(v, self.target()), Ok(Ok(()))))
            .collect()
    }

    /// Applies one step, leaving the session untouched on error.
    pub fn apply(&mut self, id: &InfluenceDiagram, step: &Step) -> Result<(), StepError> {
        let bad = |e: idvoi::ModelError| StepError::BadRequest(e.to_string());
        match step {
            Step::Observe { variable, state } => {
                let x = id.lookup(variable).map_err(bad)?;
                if id.is_decision(x) {
                    return Err(StepError::BadRequest(format!(
                        "`{variable}` is a decision; commit it with a decide step"
                    )));
                }
                let s = id.state_index(x, state).map_err(bad)?;
                if self.evidence.contains(x) {
                    return Err(StepError::Conflict(format!("`{variable}` is already observed")));
                }
                match id.observation_legal(x, self.target()).map_err(bad)? {
                    Ok(()) => {}
                    Err(illegal) => return Err(StepError::Conflict(illegal.to_string())),
                }
                let next = self.evidence.with(id, x, s).map_err(bad)?;
                possible(id, &next)?;
                self.evidence = next;
            }
            Step::Decide { decision, action } => {
                let d = id.lookup(decision).map_err(bad)?;
                let Some(k) = id.decision_index(d) else {
                    return Err(StepError::BadRequest(format!("`{decision}` is not a decision")));
                };
                let a = id.state_index(d, action).map_err(bad)?;
                match self.pending(id) {
                    None => {
                        return Err(StepError::Conflict("every decision is already committed".into()))
                    }
                    Some(p) if p != d => {
                        return Err(StepError::Conflict(format!(
                            "`{decision}` (D_{k}) is not pending; the pending decision is {} (D_{})",
                            id.name(p),
                            self.stage
                        )))
                    }
                    Some(_) => {}
                }
                self.evidence = self.evidence.with(id, d, a).map_err(bad)?;
                self.stage += 1;
            }
        }
        self.log.push(step.clone());
        Ok(())
    }

    /// Scenario in which every observation so far was made at this stage.
    pub fn scenario(&self, id: &InfluenceDiagram) -> ObservationScenario {
        ObservationScenario::modeled(id)
            .observed_at(id, &self.evidence, self.target())
            .expect("observations were legal when taken")
    }

    /// Expected utility of each action of the pending decision, acting
    /// optimally afterwards; ties go to the lowest action index.
    pub fn recommendation(&self, id: &InfluenceDiagram) -> Result<Recommendation, StepError> {
        let d = self
            .pending(id)
            .ok_or_else(|| StepError::Conflict("no decision is pending".into()))?;
        let scenario = self.scenario(id);
        let conflict = |e: SolveError| StepError::Conflict(e.to_string());
        let mut expected_utilities = Vec::new();
        for a in 0..id.cardinality(d) {
            let e = self
                .evidence
                .with(id, d, a)
                .map_err(|e| StepError::BadRequest(e.to_string()))?;
            expected_utilities.push(solve_meu(id, &scenario, &e).map_err(conflict)?.meu);
        }
        let scale = expected_utilities.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let mut best = 0;
        for (a, eu) in expected_utilities.iter().enumerate() {
            if strictly_better(*eu, expected_utilities[best], scale) {
                best = a;
            }
        }
        let actions = id.variable(d).states.clone();
        Ok(Recommendation {
            decision: id.name(d).to_string(),
            index: self.stage,
            best_action: actions[best].clone(),
            best_index: best,
            actions,
            expected_utilities,
        })
    }

    /// VOI report for the pending decision, named `decision`. Without explicit
    /// candidates every legal observation of this stage is considered.
    pub fn voi(
        &self,
        id: &InfluenceDiagram,
        decision: &str,
        candidates: Option<&[String]>,
    ) -> Result<VoiReport, StepError> {
        let bad = |e: idvoi::ModelError| StepError::BadRequest(e.to_string());
        let d = id.lookup(decision).map_err(bad)?;
        if self.pending(id) != Some(d) {
            return Err(StepError::Conflict(format!("`{decision}` is not the pending decision")));
        }
        let vars = match candidates {
            Some(names) => names
                .iter()
                .map(|n| id.lookup(n))
                .collect::<Result<Vec<_>, _>>()
                .map_err(bad)?,
            None => self.candidates(id),
        };
        voi_report(id, &VoiQuery::new(self.stage, vars, self.evidence.clone()))
            .map_err(|e| StepError::Conflict(e.to_string()))
    }

    pub fn view(&self, id: &InfluenceDiagram) -> SessionView {
        let pending_decision = self.pending(id).map(|d| PendingDecision {
            name: id.name(d).to_string(),
            index: self.stage,
            actions: id.variable(d).states.clone(),
        });
        let evidence = self
            .log
            .iter()
            .map(|step| match step {
                Step::Observe { variable, state } => Assignment {
                    variable: variable.clone(),
                    state: state.clone(),
                },
                Step::Decide { decision, action } => Assignment {
                    variable: decision.clone(),
                    state: action.clone(),
                },
            })
            .collect();
        let candidates = self
            .candidates(id)
            .into_iter()
            .map(|v| Candidate {
                name: id.name(v).to_string(),
                states: id.variable(v).states.clone(),
                interval: [
                    id.lower_bound(v).expect("chance variable"),
                    id.modeled_placement(v).expect("chance variable"),
                ],
            })
            .collect();
        SessionView {
            id: self.id.clone(),
            model_id: self.model_id.clone(),
            created: self.created,
            stage: self.stage,
            complete: self.pending(id).is_none(),
            pending_decision,
            evidence,
            candidates,
        }
    }
}

/// Rejects observations the model gives probability zero.
fn possible(id: &InfluenceDiagram, e: &Evidence) -> Result<(), StepError> {
    let engine = InferenceTree::new(id, &[]).map_err(|e| StepError::Conflict(e.to_string()))?;
    match engine.calibrate(e) {
        Ok(_) => Ok(()),
        Err(SolveError::ImpossibleEvidence(p)) => Err(StepError::Conflict(format!(
            "the observation is impossible given the session so far (P = {p})"
        ))),
        Err(e) => Err(StepError::Conflict(e.to_string())),
    }
}
