use std::collections::BTreeMap;

use super::{InfluenceDiagram, ModelError, VarId};

/// Observed states and committed decisions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Evidence {
    assignments: BTreeMap<VarId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `name = state`, checking both exist and that `name` is not yet assigned.
    pub fn assign(
        &mut self,
        id: &InfluenceDiagram,
        name: &str,
        state: &str,
    ) -> Result<(), ModelError> {
        let v = id.lookup(name)?;
        let s = id.state_index(v, state)?;
        self.assign_index(id, v, s)
    }

    pub fn assign_index(
        &mut self,
        id: &InfluenceDiagram,
        v: VarId,
        state: usize,
    ) -> Result<(), ModelError> {
        if state >= id.cardinality(v) {
            return Err(ModelError::IndexOutOfRange {
                what: "state",
                index: state,
                valid: format!("0..{}", id.cardinality(v)),
            });
        }
        if self.assignments.insert(v, state).is_some() {
            return Err(ModelError::DuplicateAssignment(id.name(v).to_string()));
        }
        Ok(())
    }

    /// Returns a copy with `v = state` added (overriding nothing).
    pub fn with(&self, id: &InfluenceDiagram, v: VarId, state: usize) -> Result<Self, ModelError> {
        let mut e = self.clone();
        e.assign_index(id, v, state)?;
        Ok(e)
    }

    /// Parses the `Var=state,Var=state` flag grammar. Labels are matched exactly.
    pub fn parse(id: &InfluenceDiagram, text: &str) -> Result<Self, ModelError> {
        let mut e = Evidence::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, state) = item
                .split_once('=')
                .ok_or_else(|| ModelError::MalformedEvidence(item.to_string()))?;
            e.assign(id, name.trim(), state.trim())?;
        }
        Ok(e)
    }

    pub fn get(&self, v: VarId) -> Option<usize> {
        self.assignments.get(&v).copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.assignments.contains_key(&v)
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.assignments.iter().map(|(v, s)| (*v, *s))
    }

    /// Human-readable `Var=state` list, sorted by variable index.
    pub fn to_labels(&self, id: &InfluenceDiagram) -> Vec<(String, String)> {
        self.iter()
            .map(|(v, s)| {
                (
                    id.name(v).to_string(),
                    id.variable(v).states[s].clone(),
                )
            })
            .collect()
    }
}

/// Placement of every chance variable into an information set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationScenario {
    placement: BTreeMap<VarId, usize>,
}

impl ObservationScenario {
    /// The placement as modeled in the diagram.
    pub fn modeled(id: &InfluenceDiagram) -> Self {
        let placement = id
            .var_ids()
            .filter_map(|v| id.modeled_placement(v).map(|k| (v, k)))
            .collect();
        ObservationScenario { placement }
    }

    pub fn placement(&self, v: VarId) -> Option<usize> {
        self.placement.get(&v).copied()
    }

    /// Moves `x` into information set `target`.
    ///
    /// Earlier placements must respect the lower bound and the decision-ancestor
    /// rule; later placements model delayed observation and are always allowed.
    pub fn with_placement(
        &self,
        id: &InfluenceDiagram,
        x: VarId,
        target: usize,
    ) -> Result<Self, ModelError> {
        check_placement(id, x, target)?;
        let mut next = self.clone();
        next.placement.insert(x, target);
        Ok(next)
    }

    /// Places every observed chance variable of `e` that sits later than `stage`
    /// into `I_stage`, as if it had just been observed. Fails when an observation
    /// that early is illegal.
    pub fn observed_at(
        &self,
        id: &InfluenceDiagram,
        e: &Evidence,
        stage: usize,
    ) -> Result<Self, ModelError> {
        let mut next = self.clone();
        for (v, _) in e.iter() {
            if next.placement(v).is_some_and(|p| p > stage) {
                next = next.with_placement(id, v, stage)?;
            }
        }
        Ok(next)
    }

    /// Chance variables placed in information set `k`.
    pub fn set(&self, k: usize) -> Vec<VarId> {
        self.placement
            .iter()
            .filter(|(_, &p)| p == k)
            .map(|(v, _)| *v)
            .collect()
    }

    /// Re-checks every placement against the diagram.
    pub fn validate(&self, id: &InfluenceDiagram) -> Result<(), ModelError> {
        for (&x, &k) in &self.placement {
            check_placement(id, x, k)?;
        }
        Ok(())
    }
}

fn check_placement(id: &InfluenceDiagram, x: VarId, target: usize) -> Result<(), ModelError> {
    let Some(m) = id.modeled_placement(x) else {
        return Err(ModelError::NotChance(id.name(x).to_string()));
    };
    let n = id.num_decisions();
    if target > n {
        return Err(ModelError::IndexOutOfRange {
            what: "information set",
            index: target,
            valid: format!("0..={n}"),
        });
    }
    if target <= m {
        if let Err(illegal) = id.observation_legal(x, target)? {
            return Err(ModelError::Illegal(illegal));
        }
    } else if let Some(illegal) = id.ancestor_violation(x, target) {
        return Err(ModelError::Illegal(illegal));
    }
    Ok(())
}
