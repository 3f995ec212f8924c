//! Influence-diagram data model: variables, tables, information sets and the
//! structural queries the solver and the value-of-information code rely on.

mod document;
mod evidence;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use document::{
    validate_document, CptDocument, ModelDocument, Rule, UtilityDocument, Variable, VariableKind,
    Violation, NORMALIZATION_TOLERANCE,
};
pub use evidence::{Evidence, ObservationScenario};

/// Rows whose sum is off by more than this (but within tolerance) are rescaled on load.
const RENORMALIZE_THRESHOLD: f64 = 1e-12;

/// Index of a variable inside an [`InfluenceDiagram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` has no state `{state}` (legal states: {})", .legal.join(", "))]
    UnknownState {
        variable: String,
        state: String,
        legal: Vec<String>,
    },
    #[error("variable `{0}` is assigned more than once")]
    DuplicateAssignment(String),
    #[error("`{0}` is not a chance variable")]
    NotChance(String),
    #[error("`{0}` is not a decision")]
    NotDecision(String),
    #[error("{what} index {index} is out of range (valid: {valid})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        valid: String,
    },
    #[error("illegal observation: {0}")]
    Illegal(IllegalObservation),
    #[error("malformed evidence item `{0}` (expected Var=state)")]
    MalformedEvidence(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Why an observation request cannot be honored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IllegalReason {
    BelowLowerBound { lower: usize },
    AfterModeledPlacement { modeled: usize },
    DecisionInfluences { decision: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IllegalObservation {
    pub variable: String,
    pub target: usize,
    pub reason: IllegalReason,
}

impl fmt::Display for IllegalObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (x, t) = (&self.variable, self.target);
        match &self.reason {
            IllegalReason::BelowLowerBound { lower } => write!(
                f,
                "`{x}` cannot be observed in I_{t}: below lower bound I_{lower}"
            ),
            IllegalReason::AfterModeledPlacement { modeled } => write!(
                f,
                "`{x}` cannot be observed in I_{t}: after its modeled placement I_{modeled}"
            ),
            IllegalReason::DecisionInfluences { decision, index } => write!(
                f,
                "`{x}` cannot be observed in I_{t}: decision {decision} (D_{index}) influences {x}"
            ),
        }
    }
}

/// Conditional probability table of one chance variable.
///
/// Values are row-major over `(parents..., child)` with the child varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub values: Vec<f64>,
}

/// One additive utility term. Values are row-major over `parents`, last fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityNode {
    pub name: String,
    pub parents: Vec<VarId>,
    pub values: Vec<f64>,
}

/// A validated influence diagram. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceDiagram {
    variables: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    cpts: Vec<Cpt>,
    cpt_of: Vec<Option<usize>>,
    utilities: Vec<UtilityNode>,
    decisions: Vec<VarId>,
    information_sets: Vec<Vec<VarId>>,
    lower_bounds: BTreeMap<VarId, usize>,
    placement: Vec<Option<usize>>,
    decision_index: Vec<Option<usize>>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
}

/// Parses and validates a serialized diagram.
pub fn parse_model(text: &str) -> Result<InfluenceDiagram, ModelError> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    InfluenceDiagram::from_document(&doc)
}

/// Serializes a diagram in the document format accepted by [`parse_model`].
pub fn serialize_model(id: &InfluenceDiagram) -> String {
    serde_json::to_string_pretty(&id.to_document()).expect("document serialization is infallible")
}

/// Lists every invariant the document breaks; empty iff it is valid.
pub fn validate_model(doc: &ModelDocument) -> Vec<Violation> {
    validate_document(doc)
}

impl InfluenceDiagram {
    pub fn from_document(doc: &ModelDocument) -> Result<Self, ModelError> {
        let violations = validate_document(doc);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }

        let variables = doc.variables.clone();
        let by_name: HashMap<String, VarId> = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), VarId(i)))
            .collect();
        let id = |name: &str| by_name[name];
        let nvars = variables.len();

        let mut cpts = Vec::with_capacity(doc.cpts.len());
        let mut cpt_of = vec![None; nvars];
        let mut parents = vec![Vec::new(); nvars];
        let mut children = vec![Vec::new(); nvars];
        for c in &doc.cpts {
            let child = id(&c.child);
            let ps: Vec<VarId> = c.parents.iter().map(|p| id(p)).collect();
            let k = variables[child.0].states.len();
            let mut values = c.values.clone();
            for row in values.chunks_mut(k) {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > RENORMALIZE_THRESHOLD {
                    row.iter_mut().for_each(|x| *x /= sum);
                }
            }
            for &p in &ps {
                children[p.0].push(child);
            }
            parents[child.0] = ps.clone();
            cpt_of[child.0] = Some(cpts.len());
            cpts.push(Cpt {
                child,
                parents: ps,
                values,
            });
        }
        for ch in &mut children {
            ch.sort_unstable();
        }

        let utilities = doc
            .utilities
            .iter()
            .map(|u| UtilityNode {
                name: u.name.clone(),
                parents: u.parents.iter().map(|p| id(p)).collect(),
                values: u.values.clone(),
            })
            .collect();

        let decisions: Vec<VarId> = doc.decision_order.iter().map(|d| id(d)).collect();
        let mut decision_index = vec![None; nvars];
        for (k, d) in decisions.iter().enumerate() {
            decision_index[d.0] = Some(k + 1);
        }
        let information_sets: Vec<Vec<VarId>> = doc
            .information_sets
            .iter()
            .map(|s| s.iter().map(|x| id(x)).collect())
            .collect();
        let mut placement = vec![None; nvars];
        for (k, set) in information_sets.iter().enumerate() {
            for x in set {
                placement[x.0] = Some(k);
            }
        }
        let lower_bounds = doc
            .observation_lower_bounds
            .iter()
            .map(|(x, &l)| (id(x), l))
            .collect();

        Ok(InfluenceDiagram {
            variables,
            by_name,
            cpts,
            cpt_of,
            utilities,
            decisions,
            information_sets,
            lower_bounds,
            placement,
            decision_index,
            parents,
            children,
        })
    }

    pub fn to_document(&self) -> ModelDocument {
        let name = |v: &VarId| self.variables[v.0].name.clone();
        ModelDocument {
            variables: self.variables.clone(),
            cpts: self
                .cpts
                .iter()
                .map(|c| CptDocument {
                    child: name(&c.child),
                    parents: c.parents.iter().map(name).collect(),
                    values: c.values.clone(),
                })
                .collect(),
            utilities: self
                .utilities
                .iter()
                .map(|u| UtilityDocument {
                    name: u.name.clone(),
                    parents: u.parents.iter().map(name).collect(),
                    values: u.values.clone(),
                })
                .collect(),
            decision_order: self.decisions.iter().map(name).collect(),
            information_sets: self
                .information_sets
                .iter()
                .map(|s| s.iter().map(name).collect())
                .collect(),
            observation_lower_bounds: self
                .lower_bounds
                .iter()
                .map(|(x, &l)| (name(x), l))
                .collect(),
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.variables.len()).map(VarId)
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.variables[v.0]
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.variables[v.0].name
    }

    pub fn cardinality(&self, v: VarId) -> usize {
        self.variables[v.0].states.len()
    }

    pub fn kind(&self, v: VarId) -> VariableKind {
        self.variables[v.0].kind
    }

    pub fn is_decision(&self, v: VarId) -> bool {
        self.kind(v) == VariableKind::Decision
    }

    pub fn lookup(&self, name: &str) -> Result<VarId, ModelError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
    }

    pub fn state_index(&self, v: VarId, state: &str) -> Result<usize, ModelError> {
        let var = &self.variables[v.0];
        var.states
            .iter()
            .position(|s| s == state)
            .ok_or_else(|| ModelError::UnknownState {
                variable: var.name.clone(),
                state: state.to_string(),
                legal: var.states.clone(),
            })
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, v: VarId) -> Option<&Cpt> {
        self.cpt_of[v.0].map(|i| &self.cpts[i])
    }

    pub fn utilities(&self) -> &[UtilityNode] {
        &self.utilities
    }

    /// Decisions in temporal order, `D_1..D_n`.
    pub fn decisions(&self) -> &[VarId] {
        &self.decisions
    }

    pub fn num_decisions(&self) -> usize {
        self.decisions.len()
    }

    /// The decision `D_i`, 1-based.
    pub fn decision(&self, i: usize) -> Result<VarId, ModelError> {
        if i == 0 || i > self.decisions.len() {
            return Err(ModelError::IndexOutOfRange {
                what: "decision",
                index: i,
                valid: format!("1..={}", self.decisions.len()),
            });
        }
        Ok(self.decisions[i - 1])
    }

    /// 1-based position of a decision in the decision order.
    pub fn decision_index(&self, v: VarId) -> Option<usize> {
        self.decision_index[v.0]
    }

    pub fn information_sets(&self) -> &[Vec<VarId>] {
        &self.information_sets
    }

    /// Modeled information-set index of a chance variable.
    pub fn modeled_placement(&self, v: VarId) -> Option<usize> {
        self.placement[v.0]
    }

    /// Earliest information set in which `v` may be observed.
    pub fn lower_bound(&self, v: VarId) -> Option<usize> {
        let m = self.placement[v.0]?;
        Some(self.lower_bounds.get(&v).copied().unwrap_or(m))
    }

    pub fn explicit_lower_bounds(&self) -> &BTreeMap<VarId, usize> {
        &self.lower_bounds
    }

    /// CPT parents of `v` (empty for decisions).
    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.parents[v.0]
    }

    /// Chance variables whose CPT lists `v` as a parent.
    pub fn children(&self, v: VarId) -> &[VarId] {
        &self.children[v.0]
    }

    pub fn ancestors(&self, v: VarId) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<VarId> = self.parents[v.0].clone();
        while let Some(p) = stack.pop() {
            if seen.insert(p) {
                stack.extend(self.parents[p.0].iter().copied());
            }
        }
        seen
    }

    pub fn descendants(&self, v: VarId) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<VarId> = self.children[v.0].clone();
        while let Some(c) = stack.pop() {
            if seen.insert(c) {
                stack.extend(self.children[c.0].iter().copied());
            }
        }
        seen
    }

    /// Union of all utility parents.
    pub fn utility_parents(&self) -> BTreeSet<VarId> {
        self.utilities
            .iter()
            .flat_map(|u| u.parents.iter().copied())
            .collect()
    }

    /// `V_i`: every variable preceding `D_i` under `scenario`.
    pub fn past_of(
        &self,
        i: usize,
        scenario: &ObservationScenario,
    ) -> Result<BTreeSet<VarId>, ModelError> {
        self.decision(i)?;
        let mut past: BTreeSet<VarId> = self.decisions[..i - 1].iter().copied().collect();
        for v in self.var_ids() {
            if let Some(k) = scenario.placement(v) {
                if k < i {
                    past.insert(v);
                }
            }
        }
        Ok(past)
    }

    /// Parents, children and the children's other parents of `x`.
    pub fn markov_blanket(&self, x: VarId) -> BTreeSet<VarId> {
        let mut mb: BTreeSet<VarId> = self.parents[x.0].iter().copied().collect();
        for &c in &self.children[x.0] {
            mb.insert(c);
            mb.extend(self.parents[c.0].iter().copied());
        }
        mb.remove(&x);
        mb
    }

    /// Decisions (by 1-based index) that are ancestors of `x`, ascending.
    pub fn decision_ancestors(&self, x: VarId) -> Vec<usize> {
        let mut ks: Vec<usize> = self
            .ancestors(x)
            .into_iter()
            .filter_map(|a| self.decision_index(a))
            .collect();
        ks.sort_unstable();
        ks
    }

    /// Whether `x` may be observed in information set `target`.
    pub fn observation_legal(
        &self,
        x: VarId,
        target: usize,
    ) -> Result<Result<(), IllegalObservation>, ModelError> {
        let Some(m) = self.placement[x.0] else {
            return Err(ModelError::NotChance(self.name(x).to_string()));
        };
        let n = self.num_decisions();
        if target > n {
            return Err(ModelError::IndexOutOfRange {
                what: "information set",
                index: target,
                valid: format!("0..={n}"),
            });
        }
        let illegal = |reason| {
            Ok(Err(IllegalObservation {
                variable: self.name(x).to_string(),
                target,
                reason,
            }))
        };
        // a declared bound is reported first; the decision-ancestor rule takes
        // precedence over the implicit bound (the modeled placement)
        if let Some(&l) = self.lower_bounds.get(&x) {
            if target < l {
                return illegal(IllegalReason::BelowLowerBound { lower: l });
            }
        }
        if target > m {
            return illegal(IllegalReason::AfterModeledPlacement { modeled: m });
        }
        if let Some(err) = self.ancestor_violation(x, target) {
            return Ok(Err(err));
        }
        if target < m && !self.lower_bounds.contains_key(&x) {
            return illegal(IllegalReason::BelowLowerBound { lower: m });
        }
        Ok(Ok(()))
    }

    /// The ancestor rule alone: no decision `D_k` with `k > target` may influence `x`.
    pub(crate) fn ancestor_violation(&self, x: VarId, target: usize) -> Option<IllegalObservation> {
        self.decision_ancestors(x)
            .into_iter()
            .rev()
            .find(|&k| k > target)
            .map(|k| IllegalObservation {
                variable: self.name(x).to_string(),
                target,
                reason: IllegalReason::DecisionInfluences {
                    decision: self.name(self.decisions[k - 1]).to_string(),
                    index: k,
                },
            })
    }

    /// Temporal position under `scenario`: `I_k` maps to `2k`, `D_k` to `2k - 1`.
    pub fn temporal_position(&self, v: VarId, scenario: &ObservationScenario) -> usize {
        match self.decision_index(v) {
            Some(k) => 2 * k - 1,
            None => 2 * scenario.placement(v).unwrap_or(self.num_decisions()),
        }
    }

    /// Sum of all utility terms at a full assignment (indexed by `VarId`).
    pub fn total_utility(&self, assignment: &[usize]) -> f64 {
        self.utilities
            .iter()
            .map(|u| u.values[self.row_index(&u.parents, assignment)])
            .sum()
    }

    fn row_index(&self, vars: &[VarId], assignment: &[usize]) -> usize {
        vars.iter()
            .fold(0, |acc, v| acc * self.cardinality(*v) + assignment[v.0])
    }
}

#[cfg(test)]
mod tests;
