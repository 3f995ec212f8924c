//! Collect propagation over strong junction trees: maximum expected utility,
//! optimal policies and evidence probability; plus probability-only propagation
//! for posterior queries.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::jtree::{
    build_inference_tree, build_strong_tree, control_schedule, strong_elimination_order,
    ControlSchedule, JtreeError, Operator, StrongJunctionTree,
};
use crate::model::{Evidence, InfluenceDiagram, ModelError, ObservationScenario, VarId};
use crate::potentials::{
    apply_evidence, combine, divide, max_out, sum_out, ArgmaxTable, Domain, PairPotential,
    Potential, PotentialError,
};

/// Root probability at or below this is treated as impossible evidence.
pub const IMPOSSIBLE_EVIDENCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Jtree(#[from] JtreeError),
    #[error("numeric failure: {0}")]
    Potential(#[from] PotentialError),
    #[error("impossible evidence: P(e) = {0}")]
    ImpossibleEvidence(f64),
    #[error("evidence on `{variable}` lies in the future of the last committed decision")]
    FutureEvidence { variable: String },
    #[error("past decision `{decision}` must be instantiated in the evidence")]
    UndecidedPast { decision: String },
    #[error("no clique holds all of {0:?} jointly")]
    NotJointlyCovered(Vec<String>),
}

/// Decision rule for one decision: an action per configuration of `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub decision: VarId,
    pub domain: Vec<VarId>,
    pub cards: Vec<usize>,
    /// Row-major over `domain`, last variable fastest.
    pub actions: Vec<usize>,
}

impl Policy {
    fn from_argmax(t: ArgmaxTable) -> Self {
        Policy {
            decision: t.decision,
            domain: t.domain.vars().to_vec(),
            cards: t.domain.cards().to_vec(),
            actions: t.actions,
        }
    }

    /// The action chosen when the domain variables take the states in `assignment`
    /// (indexed by `VarId`).
    pub fn action_for(&self, assignment: &[usize]) -> usize {
        let row = self
            .domain
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (v, c)| acc * c + assignment[v.0]);
        self.actions[row]
    }

    /// Action chosen under `e`, when `e` fixes every domain variable.
    pub fn action_under(&self, e: &Evidence) -> Option<usize> {
        let mut row = 0;
        for (v, c) in self.domain.iter().zip(&self.cards) {
            row = row * c + e.get(*v)?;
        }
        Some(self.actions[row])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub meu: f64,
    pub evidence_probability: f64,
    /// In decision order.
    pub policies: Vec<Policy>,
    pub propagations: usize,
}

/// A strong junction tree with a control schedule for one scenario.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub tree: StrongJunctionTree,
    pub schedule: ControlSchedule,
}

pub fn compile(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
) -> Result<Compiled, SolveError> {
    let order = strong_elimination_order(id, scenario)?;
    let tree = build_strong_tree(id, &order)?;
    let schedule = control_schedule(&tree, id, scenario)?;
    Ok(Compiled { tree, schedule })
}

/// Per-clique working potentials: assigned CPTs and utilities multiplied in,
/// evidence entered. Cliques without assignments hold unit pairs.
pub fn assign_and_enter(
    tree: &StrongJunctionTree,
    id: &InfluenceDiagram,
    e: &Evidence,
) -> Result<Vec<PairPotential>, SolveError> {
    let mut work: Vec<PairPotential> = tree
        .cliques()
        .iter()
        .map(|c| PairPotential::unit_over(Domain::of(id, &c.members)))
        .collect();
    for (i, cpt) in id.cpts().iter().enumerate() {
        let mut fam = cpt.parents.clone();
        fam.push(cpt.child);
        let p = Potential::new(Domain::of(id, &fam), cpt.values.clone())?;
        let c = tree.cpt_home(i);
        work[c] = combine(&work[c], &PairPotential::from_prob(p))?;
    }
    for (i, u) in id.utilities().iter().enumerate() {
        let p = Potential::new(Domain::of(id, &u.parents), u.values.clone())?;
        let c = tree.utility_home(i);
        work[c] = combine(&work[c], &PairPotential::from_util(p))?;
    }
    Ok(work
        .into_iter()
        .map(|w| apply_evidence(&w, e))
        .collect())
}

/// Outcome of one collect to the strong root.
#[derive(Debug, Clone)]
pub struct Collected {
    pub evidence_probability: f64,
    pub meu: f64,
    pub policies: Vec<ArgmaxTable>,
}

/// Runs one collect operation, eliminating variables per `schedule`.
///
/// Decisions fixed by `e` are maximized over their single consistent action and
/// produce no policy.
pub fn collect(
    tree: &StrongJunctionTree,
    schedule: &ControlSchedule,
    mut work: Vec<PairPotential>,
    e: &Evidence,
) -> Result<Collected, SolveError> {
    let mut eliminated: BTreeSet<VarId> = BTreeSet::new();
    let mut messages: Vec<Option<PairPotential>> = vec![None; work.len()];
    let mut policies = Vec::new();
    let mut root_pair = PairPotential::unit();
    for c in tree.bottom_up() {
        let mut table = std::mem::replace(&mut work[c], PairPotential::unit());
        for &ch in tree.children(c) {
            let msg = messages[ch].take().expect("children are processed first");
            table = combine(&table, &msg)?;
        }
        // expansion dimensions of variables already eliminated below carry
        // identical slices; keep one
        let stale: Vec<VarId> = table
            .domain()
            .vars()
            .iter()
            .copied()
            .filter(|v| eliminated.contains(v))
            .collect();
        for v in stale {
            table = table.slice(v, 0)?;
        }
        for step in schedule.steps(c) {
            table = match step.op {
                Operator::Sum => sum_out(&table, step.var)?,
                Operator::Max => {
                    let (next, argmax) = max_out(&table, step.var)?;
                    if !e.contains(step.var) {
                        policies.push(argmax);
                    }
                    next
                }
            };
            eliminated.insert(step.var);
        }
        match tree.parent(c) {
            Some(_) => {
                let sep = PairPotential::unit_over(table.domain().clone());
                messages[c] = Some(divide(&table, &sep)?);
            }
            None => root_pair = table,
        }
    }
    let (prob, meu) = root_pair
        .scalar()
        .ok_or_else(|| JtreeError::InvalidSchedule("root is not fully eliminated".into()))?;
    if prob <= IMPOSSIBLE_EVIDENCE {
        return Err(SolveError::ImpossibleEvidence(prob));
    }
    Ok(Collected {
        evidence_probability: prob,
        meu,
        policies,
    })
}

/// Checks that `e` only covers the past: the committed decisions `D_1..D_s`
/// (all of them) and chance variables placed in `I_0..I_s` under `scenario`,
/// where `s` is the last decision fixed by `e`.
pub fn check_past_evidence(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    e: &Evidence,
) -> Result<usize, SolveError> {
    let stage = e
        .iter()
        .filter_map(|(v, _)| id.decision_index(v))
        .max()
        .unwrap_or(0);
    for k in 1..=stage {
        let d = id.decisions()[k - 1];
        if !e.contains(d) {
            return Err(SolveError::UndecidedPast {
                decision: id.name(d).to_string(),
            });
        }
    }
    if stage < id.num_decisions() {
        for (v, _) in e.iter() {
            if let Some(k) = scenario.placement(v) {
                if k > stage {
                    return Err(SolveError::FutureEvidence {
                        variable: id.name(v).to_string(),
                    });
                }
            }
        }
    }
    Ok(stage)
}

/// Solves on a precompiled tree; one collect.
pub fn solve_compiled(
    compiled: &Compiled,
    id: &InfluenceDiagram,
    e: &Evidence,
) -> Result<Solution, SolveError> {
    let work = assign_and_enter(&compiled.tree, id, e)?;
    let out = collect(&compiled.tree, &compiled.schedule, work, e)?;
    let mut policies: Vec<Policy> = out.policies.into_iter().map(Policy::from_argmax).collect();
    policies.sort_by_key(|p| id.decision_index(p.decision));
    Ok(Solution {
        meu: out.meu,
        evidence_probability: out.evidence_probability,
        policies,
        propagations: 1,
    })
}

/// Maximum expected utility and optimal policies given past evidence `e`.
///
/// Past observables left out of `e` are averaged over outside the maximization,
/// i.e. the result is the expected value of the conditional MEU.
pub fn solve_meu(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    e: &Evidence,
) -> Result<Solution, SolveError> {
    scenario.validate(id)?;
    check_past_evidence(id, scenario, e)?;
    let compiled = compile(id, scenario)?;
    solve_compiled(&compiled, id, e)
}

/// How decisions are treated in a posterior query.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum DecisionPolicy {
    /// Every decision is a chance variable with the even distribution.
    #[default]
    Uniform,
    /// Decisions are set as given (remaining ones uniform).
    Fixed(Evidence),
}

/// Probability-only clique tree with decisions given the even distribution.
/// Each call to [`InferenceTree::calibrate`] is one propagation.
#[derive(Debug, Clone)]
pub struct InferenceTree {
    tree: StrongJunctionTree,
    base: Vec<PairPotential>,
}

impl InferenceTree {
    /// `joint` lists variable sets that must be covered by a single clique.
    pub fn new(id: &InfluenceDiagram, joint: &[Vec<VarId>]) -> Result<Self, SolveError> {
        let tree = build_inference_tree(id, joint)?;
        let mut base: Vec<PairPotential> = tree
            .cliques()
            .iter()
            .map(|c| PairPotential::unit_over(Domain::of(id, &c.members)))
            .collect();
        for (i, cpt) in id.cpts().iter().enumerate() {
            let mut fam = cpt.parents.clone();
            fam.push(cpt.child);
            let p = Potential::new(Domain::of(id, &fam), cpt.values.clone())?;
            let c = tree.cpt_home(i);
            base[c] = combine(&base[c], &PairPotential::from_prob(p))?;
        }
        for &d in id.decisions() {
            let k = id.cardinality(d);
            let p = Potential::new(Domain::of(id, &[d]), vec![1.0 / k as f64; k])?;
            let c = tree.top_clique(d).expect("every variable is in some clique");
            base[c] = combine(&base[c], &PairPotential::from_prob(p))?;
        }
        Ok(InferenceTree { tree, base })
    }

    pub fn tree(&self) -> &StrongJunctionTree {
        &self.tree
    }

    /// Collect and distribute with `e` entered.
    pub fn calibrate(&self, e: &Evidence) -> Result<Calibrated, SolveError> {
        let t = &self.tree;
        let mut tables: Vec<PairPotential> =
            self.base.iter().map(|p| apply_evidence(p, e)).collect();
        let mut seps: Vec<Option<PairPotential>> = vec![None; tables.len()];
        let marginal = |p: &PairPotential, keep: &[VarId]| -> Result<PairPotential, SolveError> {
            let mut out = p.clone();
            for v in p.domain().vars() {
                if !keep.contains(v) {
                    out = sum_out(&out, *v)?;
                }
            }
            Ok(out)
        };
        for c in t.bottom_up() {
            if let Some(p) = t.parent(c) {
                let sep = t.separator(c).unwrap_or_default();
                let msg = marginal(&tables[c], &sep)?;
                tables[p] = combine(&tables[p], &msg)?.aligned_to(tables[p].domain())?;
                seps[c] = Some(msg);
            }
        }
        for c in t.top_down() {
            for &ch in t.children(c) {
                let sep = t.separator(ch).unwrap_or_default();
                let fresh = marginal(&tables[c], &sep)?;
                let old = seps[ch].take().expect("collected");
                let old = old.aligned_to(fresh.domain())?;
                let update = divide(&fresh, &old)?;
                tables[ch] = combine(&tables[ch], &update)?.aligned_to(tables[ch].domain())?;
            }
        }
        let root = &tables[t.root()];
        let mass: f64 = root.prob().iter().sum();
        if mass <= IMPOSSIBLE_EVIDENCE {
            return Err(SolveError::ImpossibleEvidence(mass));
        }
        Ok(Calibrated { tables, mass })
    }
}

/// A calibrated tree: every clique holds the joint of its members with `e`.
#[derive(Debug, Clone)]
pub struct Calibrated {
    tables: Vec<PairPotential>,
    mass: f64,
}

impl Calibrated {
    /// `P(e)`, with decisions weighted uniformly.
    pub fn evidence_probability(&self) -> f64 {
        self.mass
    }

    /// `P(vars | e)` over `vars` in the given order, if one clique covers them.
    pub fn joint(&self, id: &InfluenceDiagram, vars: &[VarId]) -> Result<Potential, SolveError> {
        let holder = self
            .tables
            .iter()
            .filter(|t| vars.iter().all(|v| t.domain().contains(*v)))
            .min_by_key(|t| t.domain().size())
            .ok_or_else(|| {
                SolveError::NotJointlyCovered(vars.iter().map(|v| id.name(*v).to_string()).collect())
            })?;
        let mut p = holder.clone();
        for v in holder.domain().vars() {
            if !vars.contains(v) {
                p = sum_out(&p, *v)?;
            }
        }
        let mut out = p.aligned_to(&Domain::of(id, vars))?.prob_potential();
        out.normalize();
        Ok(out)
    }
}

/// Posterior marginal `P(t | e)` for each target.
pub fn bn_posterior(
    id: &InfluenceDiagram,
    e: &Evidence,
    targets: &[VarId],
    decisions: &DecisionPolicy,
) -> Result<Vec<Potential>, SolveError> {
    let mut e = e.clone();
    if let DecisionPolicy::Fixed(fixed) = decisions {
        for (d, a) in fixed.iter() {
            if !id.is_decision(d) {
                return Err(ModelError::NotDecision(id.name(d).to_string()).into());
            }
            if e.get(d) != Some(a) {
                e.assign_index(id, d, a)?;
            }
        }
    }
    let cal = InferenceTree::new(id, &[])?.calibrate(&e)?;
    targets.iter().map(|t| cal.joint(id, &[*t])).collect()
}

/// Joint posterior `P(targets | e)`; the set is kept together in one clique.
pub fn bn_joint_posterior(
    id: &InfluenceDiagram,
    e: &Evidence,
    targets: &[VarId],
) -> Result<Potential, SolveError> {
    let cal = InferenceTree::new(id, &[targets.to_vec()])?.calibrate(e)?;
    cal.joint(id, targets)
}

#[derive(Serialize)]
struct PolicyDoc {
    decision: String,
    domain: Vec<String>,
    /// One action label per domain configuration, row-major, last variable fastest.
    actions: Vec<String>,
}

#[derive(Serialize)]
struct SolutionDoc {
    meu: f64,
    evidence_probability: f64,
    propagations: usize,
    policies: Vec<PolicyDoc>,
}

impl Solution {
    pub fn to_json(&self, id: &InfluenceDiagram) -> serde_json::Value {
        let doc = SolutionDoc {
            meu: self.meu,
            evidence_probability: self.evidence_probability,
            propagations: self.propagations,
            policies: self
                .policies
                .iter()
                .map(|p| PolicyDoc {
                    decision: id.name(p.decision).to_string(),
                    domain: p.domain.iter().map(|v| id.name(*v).to_string()).collect(),
                    actions: p
                        .actions
                        .iter()
                        .map(|&a| id.variable(p.decision).states[a].clone())
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("solution serializes")
    }
}
