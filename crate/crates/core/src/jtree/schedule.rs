//! Control schedules: which clique eliminates each variable, and in what order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{JtreeError, StrongJunctionTree};
use crate::model::{InfluenceDiagram, ObservationScenario, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Sum,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EliminationStep {
    pub var: VarId,
    pub op: Operator,
}

/// Per-clique ordered elimination lists for one observation scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlSchedule {
    steps: Vec<Vec<EliminationStep>>,
    home: Vec<usize>,
}

impl ControlSchedule {
    /// Wraps hand-written per-clique step lists, e.g. for [`validate_schedule`].
    pub fn from_steps(steps: Vec<Vec<EliminationStep>>, num_variables: usize) -> Self {
        let mut home = vec![usize::MAX; num_variables];
        for (c, list) in steps.iter().enumerate() {
            for s in list {
                home[s.var.0] = c;
            }
        }
        ControlSchedule { steps, home }
    }

    /// Eliminations performed in clique `c`, in order.
    pub fn steps(&self, c: usize) -> &[EliminationStep] {
        &self.steps[c]
    }

    /// Clique in which `v` is eliminated.
    pub fn home(&self, v: VarId) -> usize {
        self.home[v.0]
    }

    pub fn dump(&self, tree: &StrongJunctionTree, id: &InfluenceDiagram) -> String {
        let mut out = String::new();
        for c in tree.bottom_up() {
            for s in &self.steps[c] {
                let op = match s.op {
                    Operator::Sum => "sum",
                    Operator::Max => "max",
                };
                let _ = writeln!(out, "step {c}: {op} {}", id.name(s.var));
            }
        }
        out
    }
}

fn operator(id: &InfluenceDiagram, v: VarId) -> Operator {
    if id.is_decision(v) {
        Operator::Max
    } else {
        Operator::Sum
    }
}

fn assemble(
    tree: &StrongJunctionTree,
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    home: &[usize],
) -> ControlSchedule {
    let mut steps: Vec<Vec<EliminationStep>> = vec![Vec::new(); tree.cliques().len()];
    for v in id.var_ids() {
        steps[home[v.0]].push(EliminationStep {
            var: v,
            op: operator(id, v),
        });
    }
    for list in &mut steps {
        list.sort_by_key(|s| {
            (
                std::cmp::Reverse(id.temporal_position(s.var, scenario)),
                tree.elimination_rank(s.var),
            )
        });
    }
    ControlSchedule {
        steps,
        home: home.to_vec(),
    }
}

/// A schedule violation: `var` was eliminated while `blocking`, which comes later
/// in time, was still in the same table.
#[derive(Debug)]
struct Conflict {
    var: VarId,
    blocking: VarId,
}

/// Builds a schedule eliminating every variable in reverse temporal order with
/// respect to the variables sharing its table at the time of elimination.
///
/// Each variable starts in the highest clique that holds it from triangulation;
/// a variable that would be eliminated too early is lifted along the cliques that
/// hold it by expansion. Fails if no placement works on this tree.
pub fn control_schedule(
    tree: &StrongJunctionTree,
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
) -> Result<ControlSchedule, JtreeError> {
    scenario.validate(id)?;
    let mut home = Vec::with_capacity(id.num_variables());
    for v in id.var_ids() {
        let c = tree
            .native_top_clique(v)
            .ok_or_else(|| JtreeError::NotInTree(id.name(v).to_string()))?;
        home.push(c);
    }
    // each lift moves one variable one clique up; bounded by total depth
    let limit = id.num_variables() * tree.cliques().len() + 1;
    for _ in 0..limit {
        let schedule = assemble(tree, id, scenario, &home);
        match replay(tree, id, scenario, &schedule) {
            Ok(()) => return Ok(schedule),
            Err(ReplayError::Conflict(Conflict { var, blocking })) => {
                let here = home[var.0];
                match tree.parent(here) {
                    Some(p) if tree.cliques()[p].contains(var) => home[var.0] = p,
                    _ => {
                        return Err(JtreeError::ExpansionRequired {
                            variable: id.name(var).to_string(),
                            blocking: id.name(blocking).to_string(),
                        })
                    }
                }
            }
            Err(ReplayError::Structural(msg)) => return Err(JtreeError::InvalidSchedule(msg)),
        }
    }
    Err(JtreeError::InvalidSchedule(
        "schedule search did not converge".to_string(),
    ))
}

/// Replays `schedule` symbolically and checks the reverse-temporal rule at every
/// elimination step, plus coverage and tree consistency.
pub fn validate_schedule(
    tree: &StrongJunctionTree,
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    schedule: &ControlSchedule,
) -> Result<(), JtreeError> {
    replay(tree, id, scenario, schedule).map_err(|e| match e {
        ReplayError::Conflict(Conflict { var, blocking }) => JtreeError::InvalidSchedule(format!(
            "`{}` eliminated before the later `{}`",
            id.name(var),
            id.name(blocking)
        )),
        ReplayError::Structural(msg) => JtreeError::InvalidSchedule(msg),
    })
}

enum ReplayError {
    Conflict(Conflict),
    Structural(String),
}

fn replay(
    tree: &StrongJunctionTree,
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    schedule: &ControlSchedule,
) -> Result<(), ReplayError> {
    let nvars = id.num_variables();
    let pos: Vec<usize> = id
        .var_ids()
        .map(|v| id.temporal_position(v, scenario))
        .collect();
    let mut eliminated_at: Vec<Option<usize>> = vec![None; nvars];

    for c in tree.bottom_up() {
        let mut table: BTreeSet<VarId> = BTreeSet::new();
        for &v in &tree.cliques()[c].members {
            match eliminated_at[v.0] {
                None => {
                    table.insert(v);
                }
                // leftover expansion dimension, sliced away
                Some(at)
                    if tree.is_ancestor_or_self(c, at)
                        && tree.cliques()[c].expanded.contains(&v) => {}
                Some(at) => {
                    return Err(ReplayError::Structural(format!(
                        "`{}` eliminated in clique {at}, which is not below clique {c}",
                        id.name(v)
                    )))
                }
            }
        }
        for step in schedule.steps(c) {
            let v = step.var;
            if step.op != operator(id, v) {
                return Err(ReplayError::Structural(format!(
                    "wrong operator for `{}`",
                    id.name(v)
                )));
            }
            if !table.remove(&v) {
                return Err(ReplayError::Structural(format!(
                    "`{}` is not available in clique {c}",
                    id.name(v)
                )));
            }
            if let Some(&w) = table.iter().find(|w| pos[w.0] > pos[v.0]) {
                return Err(ReplayError::Conflict(Conflict { var: v, blocking: w }));
            }
            eliminated_at[v.0] = Some(c);
        }
        match tree.parent(c) {
            Some(p) => {
                if let Some(v) = table.iter().find(|v| !tree.cliques()[p].contains(**v)) {
                    return Err(ReplayError::Structural(format!(
                        "`{}` leaves clique {c} without being eliminated",
                        id.name(*v)
                    )));
                }
            }
            None => {
                if let Some(v) = table.iter().next() {
                    return Err(ReplayError::Structural(format!(
                        "`{}` is never eliminated",
                        id.name(*v)
                    )));
                }
            }
        }
    }
    if let Some(v) = eliminated_at.iter().position(Option::is_none) {
        return Err(ReplayError::Structural(format!(
            "`{}` is never eliminated",
            id.name(VarId(v))
        )));
    }
    Ok(())
}
