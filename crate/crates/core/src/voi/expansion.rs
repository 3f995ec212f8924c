//! VOI by table expansion: one strong junction tree serves both the late and
//! the early observation of a variable; only the control schedule differs.

use super::VoiError;
use crate::jtree::{
    build_strong_tree, control_schedule, expand_for_observation, strong_elimination_order,
    StrongJunctionTree,
};
use crate::model::{Evidence, InfluenceDiagram, ObservationScenario, VarId};
use crate::solve::{assign_and_enter, check_past_evidence, collect};

#[derive(Debug, Clone)]
pub struct ExpansionVoi {
    /// MEU with `x` observed immediately before `D_i`.
    pub meu_early: f64,
    /// MEU with `x` at its source placement.
    pub meu_late: f64,
    pub voi: f64,
    /// Always 2: one collect per schedule.
    pub propagations: usize,
    pub original_size: usize,
    pub expanded_size: usize,
    /// `|states(x)|`, the bound on the size ratio.
    pub alpha: usize,
    pub tree: StrongJunctionTree,
}

pub fn voi_table_expansion(
    id: &InfluenceDiagram,
    x: VarId,
    i: usize,
    j: Option<usize>,
    e: &Evidence,
) -> Result<ExpansionVoi, VoiError> {
    voi_table_expansion_in(id, &ObservationScenario::modeled(id), x, i, j, e)
}

/// `MEU(x ∈ I_{i-1}) − MEU(x ∈ I_{j-1})` given `e` over the past of `D_i`;
/// `j = None` means `x` is never observed (`I_n`). Other variables keep their
/// placement in `scenario`.
pub fn voi_table_expansion_in(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    x: VarId,
    i: usize,
    j: Option<usize>,
    e: &Evidence,
) -> Result<ExpansionVoi, VoiError> {
    let (early, late) = scenarios(id, scenario, x, i, j, e)?;

    let order = strong_elimination_order(id, &late)?;
    let tree = build_strong_tree(id, &order)?;
    let original_size = tree.total_table_size();
    let expanded = if late == early {
        tree
    } else {
        expand_for_observation(&tree, id, x, i)?
    };
    let late_schedule = control_schedule(&expanded, id, &late)?;
    let early_schedule = control_schedule(&expanded, id, &early)?;

    let meu_late = collect(&expanded, &late_schedule, assign_and_enter(&expanded, id, e)?, e)?.meu;
    let meu_early =
        collect(&expanded, &early_schedule, assign_and_enter(&expanded, id, e)?, e)?.meu;
    Ok(ExpansionVoi {
        meu_early,
        meu_late,
        voi: meu_early - meu_late,
        propagations: 2,
        original_size,
        expanded_size: expanded.total_table_size(),
        alpha: id.cardinality(x),
        tree: expanded,
    })
}

/// The early (`x ∈ I_{i-1}`) and late scenarios, after checking the query.
pub(crate) fn scenarios(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    x: VarId,
    i: usize,
    j: Option<usize>,
    e: &Evidence,
) -> Result<(ObservationScenario, ObservationScenario), VoiError> {
    id.decision(i)?;
    let n = id.num_decisions();
    let late_at = match j {
        None => n,
        Some(j) if j < i || j > n => return Err(VoiError::SourceNotLater { i, j }),
        Some(j) => j - 1,
    };
    if e.contains(x) {
        return Err(VoiError::AlreadyObserved(id.name(x).to_string()));
    }
    if let Err(illegal) = id.observation_legal(x, i - 1)? {
        return Err(VoiError::Illegal(illegal));
    }
    let late = scenario.with_placement(id, x, late_at)?;
    let early = scenario.with_placement(id, x, i - 1)?;
    let stage = check_past_evidence(id, &early, e)?;
    if stage != i - 1 {
        return Err(VoiError::EvidenceOutsidePast {
            decision: i,
            detail: format!("the last committed decision is D_{stage}"),
        });
    }
    Ok((early, late))
}
