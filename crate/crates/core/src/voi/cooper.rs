//! The Cooper transformation: utility encoded as a binary chance node, so that
//! expected utilities become probabilities.

use super::{
    check_single_decision, configurations, descendants_in, BatchVoi, CandidateValue, VoiError,
};
use crate::model::{
    CptDocument, Evidence, InfluenceDiagram, ModelError, Variable, VariableKind, VarId,
};
use crate::solve::{Calibrated, InferenceTree, SolveError};

/// The diagram extended with `NU`, where `P(NU = y | H) = (U(H) − u_min)/(u_max − u_min)`.
#[derive(Debug, Clone)]
pub struct CooperTransform {
    pub diagram: InfluenceDiagram,
    pub nu: VarId,
    /// Parents of `NU`: every utility parent, ascending.
    pub parents: Vec<VarId>,
    pub u_min: f64,
    pub u_max: f64,
}

impl CooperTransform {
    pub fn range(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn is_degenerate(&self) -> bool {
        self.u_max <= self.u_min
    }

    /// `P(NU = y | H)` rows, in the order of [`CooperTransform::parents`].
    pub fn normalized_utility(&self) -> Vec<f64> {
        let cpt = self.diagram.cpt(self.nu).expect("NU has a CPT");
        cpt.values.iter().step_by(2).copied().collect()
    }
}

fn unique_name(id: &InfluenceDiagram, base: &str) -> String {
    let mut name = base.to_string();
    while id.lookup(&name).is_ok() {
        name.push('\'');
    }
    name
}

/// Appends `NU` to the last information set. A constant utility yields a
/// degenerate transform (`u_min == u_max`) whose `NU` is `y` with probability 0.
pub fn cooper_transform(id: &InfluenceDiagram) -> Result<CooperTransform, ModelError> {
    let parents: Vec<VarId> = id.utility_parents().into_iter().collect();
    let configs = configurations(id, &parents);
    let mut assignment = vec![0; id.num_variables()];
    let totals: Vec<f64> = configs
        .iter()
        .map(|cfg| {
            for (v, s) in parents.iter().zip(cfg) {
                assignment[v.0] = *s;
            }
            id.total_utility(&assignment)
        })
        .collect();
    let u_min = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let u_max = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = u_max - u_min;
    let values = totals
        .iter()
        .flat_map(|u| {
            let y = if range > 0.0 { ((u - u_min) / range).clamp(0.0, 1.0) } else { 0.0 };
            [y, 1.0 - y]
        })
        .collect();

    let name = unique_name(id, "NU");
    let mut doc = id.to_document();
    doc.variables.push(Variable {
        name: name.clone(),
        kind: VariableKind::Chance,
        states: vec!["y".into(), "n".into()],
    });
    doc.cpts.push(CptDocument {
        child: name.clone(),
        parents: parents.iter().map(|v| id.name(*v).to_string()).collect(),
        values,
    });
    doc.information_sets
        .last_mut()
        .expect("there is always a last information set")
        .push(name.clone());
    let diagram = InfluenceDiagram::from_document(&doc)?;
    let nu = diagram.lookup(&name)?;
    Ok(CooperTransform {
        diagram,
        nu,
        parents,
        u_min,
        u_max,
    })
}

/// Which propagation plan the Cooper method follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CooperPath {
    /// `k + 2` propagations when neither candidates nor evidence descend from
    /// the decision, `2k + 1` otherwise.
    Auto,
    /// Always condition on each action separately as well (`2k + 1`).
    Full,
}

pub fn voi_cooper(
    id: &InfluenceDiagram,
    candidates: &[VarId],
    e: &Evidence,
) -> Result<BatchVoi, VoiError> {
    voi_cooper_with(id, candidates, e, CooperPath::Auto)
}

fn calibrate_or_none(
    engine: &InferenceTree,
    e: &Evidence,
    count: &mut usize,
) -> Result<Option<Calibrated>, VoiError> {
    *count += 1;
    match engine.calibrate(e) {
        Ok(c) => Ok(Some(c)),
        Err(SolveError::ImpossibleEvidence(_)) => Ok(None),
        Err(err) => Err(err.into()),
    }
}

/// VOI of each candidate for the single decision of `id` via normalized
/// expected utilities `ENU(d' | e) = P(NU = y | d', e)`.
pub fn voi_cooper_with(
    id: &InfluenceDiagram,
    candidates: &[VarId],
    e: &Evidence,
    path: CooperPath,
) -> Result<BatchVoi, VoiError> {
    let d = check_single_decision(id, candidates, e)?;
    if let Some(&x) = descendants_in(id, d, candidates.iter().copied()).first() {
        return Err(VoiError::DescendantCandidate {
            candidate: id.name(x).to_string(),
            decision: id.name(d).to_string(),
        });
    }
    let t = cooper_transform(id)?;
    let k = id.cardinality(d);
    let tid = &t.diagram;
    let engine = InferenceTree::new(tid, &[])?;
    let mut propagations = 0;

    let base = engine.calibrate(e)?;
    propagations += 1;
    let p_a: Vec<Vec<f64>> = candidates
        .iter()
        .map(|a| base.joint(tid, &[*a]).map(|p| p.values))
        .collect::<Result<_, _>>()?;

    if t.is_degenerate() {
        let values = candidates
            .iter()
            .map(|&a| CandidateValue {
                candidate: a,
                euo: t.u_min,
                voi: 0.0,
            })
            .collect();
        return Ok(BatchVoi {
            decision: d,
            baseline: t.u_min,
            values,
            propagations,
        });
    }

    let evidence_descends = !descendants_in(id, d, e.iter().map(|(v, _)| v)).is_empty();
    let short = path == CooperPath::Auto && !evidence_descends;
    let e_nu = e.with(tid, t.nu, 0)?;

    let marginals = |cal: &Option<Calibrated>| -> Result<Vec<Vec<f64>>, VoiError> {
        match cal {
            Some(c) => Ok(candidates
                .iter()
                .map(|x| c.joint(tid, &[*x]).map(|p| p.values))
                .collect::<Result<_, _>>()?),
            None => Ok(candidates.iter().map(|x| vec![0.0; id.cardinality(*x)]).collect()),
        }
    };

    // ENU(d' | e), P(A | d', e) and P(A | NU = y, d', e) for every action d'
    let mut enu = vec![0.0; k];
    let mut p_a_d: Vec<Vec<Vec<f64>>> = Vec::with_capacity(k);
    let mut p_a_nu_d: Vec<Vec<Vec<f64>>> = Vec::with_capacity(k);
    if short {
        // d is a root with the even distribution and nothing observed depends on
        // it: P(d' | e) = 1/k and P(A | d', e) = P(A | e)
        if let Some(cal) = calibrate_or_none(&engine, &e_nu, &mut propagations)? {
            let p_nu = cal.evidence_probability() / base.evidence_probability();
            let p_d = cal.joint(tid, &[d])?.values;
            for (v, pd) in enu.iter_mut().zip(&p_d) {
                *v = p_nu * pd * k as f64;
            }
        }
        for a in 0..k {
            let cal = calibrate_or_none(&engine, &e_nu.with(tid, d, a)?, &mut propagations)?;
            p_a_d.push(p_a.clone());
            p_a_nu_d.push(marginals(&cal)?);
        }
    } else {
        for (a, v) in enu.iter_mut().enumerate() {
            let given_d = calibrate_or_none(&engine, &e.with(tid, d, a)?, &mut propagations)?;
            let given_nu_d =
                calibrate_or_none(&engine, &e_nu.with(tid, d, a)?, &mut propagations)?;
            if let (Some(gd), Some(gnd)) = (&given_d, &given_nu_d) {
                *v = gnd.evidence_probability() / gd.evidence_probability();
            }
            p_a_d.push(marginals(&given_d)?);
            p_a_nu_d.push(marginals(&given_nu_d)?);
        }
    }

    let baseline_n = enu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = t.range();
    let values = candidates
        .iter()
        .enumerate()
        .map(|(ci, &x)| {
            let mut euo_n = 0.0;
            for s in 0..id.cardinality(x) {
                let w = p_a[ci][s];
                if w <= 0.0 {
                    continue;
                }
                let best = (0..k)
                    .map(|a| {
                        let den = p_a_d[a][ci][s];
                        if den <= 0.0 {
                            0.0
                        } else {
                            enu[a] * p_a_nu_d[a][ci][s] / den
                        }
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                euo_n += w * best;
            }
            let voi = range * (euo_n - baseline_n);
            CandidateValue {
                candidate: x,
                euo: t.u_min + range * baseline_n + voi,
                voi,
            }
        })
        .collect();
    Ok(BatchVoi {
        decision: d,
        baseline: t.u_min + range * baseline_n,
        values,
        propagations,
    })
}
