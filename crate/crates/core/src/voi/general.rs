//! VOI through an explicit observe/don't-observe decision `D_0` and an
//! observation node `x'` that copies `x` or reports "no observation".

use super::expansion::scenarios;
use super::VoiError;
use crate::model::{
    CptDocument, Evidence, InfluenceDiagram, ObservationScenario, Variable, VariableKind, VarId,
};
use crate::solve::solve_meu;

/// The transformed diagram. Variables of the original keep their ids.
#[derive(Debug, Clone)]
pub struct GeneralModel {
    pub diagram: InfluenceDiagram,
    /// Actions: `observe` (0) and `skip` (1).
    pub d0: VarId,
    pub observation: VarId,
}

#[derive(Debug, Clone)]
pub struct GeneralVoi {
    pub meu_observe: f64,
    pub meu_not: f64,
    pub voi: f64,
    pub propagations: usize,
    pub model: GeneralModel,
}

fn unique(id: &InfluenceDiagram, base: String) -> String {
    let mut name = base;
    while id.lookup(&name).is_ok() {
        name.push('\'');
    }
    name
}

/// Builds the diagram with `D_0` decided right after `D_{i-1}` (before `I_{i-1}`
/// is observed) and `x'` observed together with `I_{i-1}`, just before `D_i`.
/// Information sets follow `scenario`.
pub fn general_model(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    x: VarId,
    i: usize,
) -> Result<GeneralModel, VoiError> {
    id.decision(i)?;
    let name = |v: &VarId| id.name(*v).to_string();
    let mut doc = id.to_document();
    let d0 = unique(id, "D_0".to_string());
    let obs = unique(id, format!("{}'", id.name(x)));
    let mut states = id.variable(x).states.clone();
    let mut none = "no_observation".to_string();
    while states.contains(&none) {
        none.push('\'');
    }
    states.push(none);
    let k = id.cardinality(x);

    doc.variables.push(Variable {
        name: d0.clone(),
        kind: VariableKind::Decision,
        states: vec!["observe".into(), "skip".into()],
    });
    doc.variables.push(Variable {
        name: obs.clone(),
        kind: VariableKind::Chance,
        states,
    });
    // rows over (D_0, x); x' = x under observe, "no observation" otherwise
    let mut values = Vec::with_capacity(2 * k * (k + 1));
    for d0_state in 0..2 {
        for xs in 0..k {
            let hit = if d0_state == 0 { xs } else { k };
            values.extend((0..=k).map(|s| if s == hit { 1.0 } else { 0.0 }));
        }
    }
    doc.cpts.push(CptDocument {
        child: obs.clone(),
        parents: vec![d0.clone(), name(&x)],
        values,
    });
    doc.decision_order.insert(i - 1, d0.clone());

    let n = id.num_decisions();
    let mut sets: Vec<Vec<String>> = (0..=n)
        .map(|k| scenario.set(k).iter().map(name).collect())
        .collect();
    sets[i - 1].push(obs.clone());
    sets.insert(i - 1, Vec::new());
    doc.information_sets = sets;
    doc.observation_lower_bounds.clear();

    let diagram = InfluenceDiagram::from_document(&doc)?;
    Ok(GeneralModel {
        d0: diagram.lookup(&d0)?,
        observation: diagram.lookup(&obs)?,
        diagram,
    })
}

pub fn voi_general_model(
    id: &InfluenceDiagram,
    x: VarId,
    i: usize,
    e: &Evidence,
) -> Result<GeneralVoi, VoiError> {
    voi_general_model_in(id, &ObservationScenario::modeled(id), x, i, e)
}

/// Solves the transformed diagram once with `D_0 = observe` and once with
/// `D_0 = skip`; `x` keeps its placement in `scenario`.
pub fn voi_general_model_in(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
    x: VarId,
    i: usize,
    e: &Evidence,
) -> Result<GeneralVoi, VoiError> {
    // same legality and evidence checks as the expansion method
    let late = scenario.placement(x).unwrap_or(id.num_decisions());
    let j = (late < id.num_decisions()).then_some(late + 1);
    scenarios(id, scenario, x, i, j, e)?;

    let model = general_model(id, scenario, x, i)?;
    let g = &model.diagram;
    let plain = ObservationScenario::modeled(g);
    let solve = |action: usize| -> Result<f64, VoiError> {
        let mut ge = Evidence::new();
        for (v, s) in e.iter() {
            ge.assign_index(g, v, s)?;
        }
        ge.assign_index(g, model.d0, action)?;
        Ok(solve_meu(g, &plain, &ge)?.meu)
    };
    let meu_observe = solve(0)?;
    let meu_not = solve(1)?;
    Ok(GeneralVoi {
        meu_observe,
        meu_not,
        voi: meu_observe - meu_not,
        propagations: 2,
        model,
    })
}
