//! Dense probability/utility table algebra.
//!
//! A [`PairPotential`] carries a probability table `prob` and a table `util` of
//! expected utilities *given* each configuration. Combination multiplies
//! probabilities and adds utilities; summing a chance variable out re-weights
//! the utilities by the probabilities it removes, so that the fully reduced
//! pair holds `(P(e), E[U | e])` directly.
//!
//! Tables are row-major over the domain with the last variable varying fastest.

use std::fmt;

use thiserror::Error;

use crate::model::{Evidence, InfluenceDiagram, VarId};

/// Relative tolerance on the variation of `prob` across a maximized decision.
pub const DECISION_PROB_TOLERANCE: f64 = 1e-9;

/// Expected utilities closer than this, relative to the largest magnitude in
/// play, are ties; ties go to the lowest action index. Without it, actions
/// with mathematically equal utility are ranked by rounding noise.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Whether `challenger` beats `incumbent` by more than a tie at `scale`.
pub fn strictly_better(challenger: f64, incumbent: f64, scale: f64) -> bool {
    challenger - incumbent > TIE_TOLERANCE * scale.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("variable {0:?} has inconsistent cardinalities ({1} vs {2})")]
    CardinalityMismatch(VarId, usize, usize),
    #[error("variable {0:?} is not in the domain")]
    NotInDomain(VarId),
    #[error("divisor domain is not a subset of the dividend domain")]
    NotSubset,
    #[error("inconsistent zero: {0} divided by a zero separator entry")]
    InconsistentZero(f64),
    #[error(
        "probability varies over decision {decision:?} ({low} vs {high}); the elimination order is invalid"
    )]
    DecisionDependentProbability { decision: VarId, low: f64, high: f64 },
    #[error("table has {found} entries, domain needs {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

/// An ordered list of variables with their cardinalities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Domain {
    vars: Vec<VarId>,
    cards: Vec<usize>,
}

impl Domain {
    pub fn new(vars: Vec<VarId>, cards: Vec<usize>) -> Self {
        assert_eq!(vars.len(), cards.len(), "domain vars and cards differ in length");
        Domain { vars, cards }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Domain over `vars` with cardinalities taken from the diagram.
    pub fn of(id: &InfluenceDiagram, vars: &[VarId]) -> Self {
        Domain {
            vars: vars.to_vec(),
            cards: vars.iter().map(|v| id.cardinality(*v)).collect(),
        }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Number of table entries, `∏ cards`.
    pub fn size(&self) -> usize {
        self.cards.iter().product()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.vars.iter().position(|&x| x == v)
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.vars.contains(&v)
    }

    pub fn card_of(&self, v: VarId) -> Option<usize> {
        self.position(v).map(|i| self.cards[i])
    }

    /// `self` followed by the variables of `other` not already present.
    pub fn union(&self, other: &Domain) -> Result<Domain, PotentialError> {
        let mut out = self.clone();
        for (&v, &c) in other.vars.iter().zip(&other.cards) {
            match self.card_of(v) {
                Some(k) if k != c => return Err(PotentialError::CardinalityMismatch(v, k, c)),
                Some(_) => {}
                None => {
                    out.vars.push(v);
                    out.cards.push(c);
                }
            }
        }
        Ok(out)
    }

    pub fn without(&self, v: VarId) -> Domain {
        let mut out = self.clone();
        if let Some(i) = self.position(v) {
            out.vars.remove(i);
            out.cards.remove(i);
        }
        out
    }

    pub fn is_subset_of(&self, other: &Domain) -> bool {
        self.vars.iter().all(|v| other.contains(*v))
    }

    fn stride(&self, pos: usize) -> usize {
        self.cards[pos + 1..].iter().product()
    }

    /// Decomposes a linear index into per-variable states.
    pub fn config(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.cards.len()];
        for i in (0..self.cards.len()).rev() {
            out[i] = index % self.cards[i];
            index /= self.cards[i];
        }
        out
    }
}

/// For every linear index of `target`, the linear index into `source` obtained by
/// dropping the variables `source` does not mention. `source` must be a subset.
fn broadcast(target: &Domain, source: &Domain) -> Vec<usize> {
    let strides: Vec<usize> = target
        .vars
        .iter()
        .map(|v| source.position(*v).map_or(0, |p| source.stride(p)))
        .collect();
    let n = target.size();
    let mut out = Vec::with_capacity(n);
    let mut counter = vec![0usize; target.len()];
    let mut idx = 0usize;
    for _ in 0..n {
        out.push(idx);
        for d in (0..counter.len()).rev() {
            counter[d] += 1;
            idx += strides[d];
            if counter[d] < target.cards[d] {
                break;
            }
            idx -= strides[d] * counter[d];
            counter[d] = 0;
        }
    }
    out
}

/// A single real-valued table.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub domain: Domain,
    pub values: Vec<f64>,
}

impl Potential {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self, PotentialError> {
        if domain.size() != values.len() {
            return Err(PotentialError::LengthMismatch {
                expected: domain.size(),
                found: values.len(),
            });
        }
        Ok(Potential { domain, values })
    }

    pub fn constant(domain: Domain, value: f64) -> Self {
        let n = domain.size();
        Potential {
            domain,
            values: vec![value; n],
        }
    }

    /// Sums out every variable not in `keep`, returning a table over `keep`.
    pub fn marginal(&self, keep: &Domain) -> Result<Potential, PotentialError> {
        if !keep.is_subset_of(&self.domain) {
            return Err(PotentialError::NotSubset);
        }
        let map = broadcast(&self.domain, keep);
        let mut values = vec![0.0; keep.size()];
        for (i, &j) in map.iter().enumerate() {
            values[j] += self.values[i];
        }
        Ok(Potential {
            domain: keep.clone(),
            values,
        })
    }

    /// Rescales to sum 1; returns the previous total.
    pub fn normalize(&mut self) -> f64 {
        let total: f64 = self.values.iter().sum();
        if total > 0.0 {
            self.values.iter_mut().for_each(|x| *x /= total);
        }
        total
    }

    pub fn value_at(&self, config: &[usize]) -> f64 {
        let idx = config
            .iter()
            .zip(&self.domain.cards)
            .fold(0, |acc, (s, c)| acc * c + s);
        self.values[idx]
    }
}

/// Decision choices recorded by [`max_out`]: one action index per configuration
/// of the remaining domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxTable {
    pub decision: VarId,
    pub domain: Domain,
    pub actions: Vec<usize>,
}

/// Probability table and conditional expected-utility table over one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotential {
    domain: Domain,
    prob: Vec<f64>,
    util: Vec<f64>,
}

impl PairPotential {
    pub fn new(domain: Domain, prob: Vec<f64>, util: Vec<f64>) -> Result<Self, PotentialError> {
        for len in [prob.len(), util.len()] {
            if len != domain.size() {
                return Err(PotentialError::LengthMismatch {
                    expected: domain.size(),
                    found: len,
                });
            }
        }
        Ok(PairPotential { domain, prob, util })
    }

    /// `φ = 1, ψ = 0` over the empty domain.
    pub fn unit() -> Self {
        PairPotential {
            domain: Domain::empty(),
            prob: vec![1.0],
            util: vec![0.0],
        }
    }

    /// `φ = 1, ψ = 0` over `domain`.
    pub fn unit_over(domain: Domain) -> Self {
        let n = domain.size();
        PairPotential {
            domain,
            prob: vec![1.0; n],
            util: vec![0.0; n],
        }
    }

    /// A probability-only pair (`ψ = 0`).
    pub fn from_prob(p: Potential) -> Self {
        let n = p.values.len();
        PairPotential {
            domain: p.domain,
            prob: p.values,
            util: vec![0.0; n],
        }
    }

    /// A utility-only pair (`φ = 1`).
    pub fn from_util(u: Potential) -> Self {
        let n = u.values.len();
        PairPotential {
            domain: u.domain,
            prob: vec![1.0; n],
            util: u.values,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }

    pub fn util(&self) -> &[f64] {
        &self.util
    }

    pub fn prob_potential(&self) -> Potential {
        Potential {
            domain: self.domain.clone(),
            values: self.prob.clone(),
        }
    }

    pub fn util_potential(&self) -> Potential {
        Potential {
            domain: self.domain.clone(),
            values: self.util.clone(),
        }
    }

    /// The `(φ, ψ)` entry of a scalar (empty-domain) pair.
    pub fn scalar(&self) -> Option<(f64, f64)> {
        self.domain.is_empty().then(|| (self.prob[0], self.util[0]))
    }

    /// Same values laid out over `target`, which must hold the same variables.
    pub fn aligned_to(&self, target: &Domain) -> Result<PairPotential, PotentialError> {
        if target.len() != self.domain.len() || !self.domain.is_subset_of(target) {
            return Err(PotentialError::NotSubset);
        }
        let map = broadcast(target, &self.domain);
        Ok(PairPotential {
            domain: target.clone(),
            prob: map.iter().map(|&i| self.prob[i]).collect(),
            util: map.iter().map(|&i| self.util[i]).collect(),
        })
    }

    /// Broadcasts onto `target`, a superset of the current domain.
    pub fn extended_to(&self, target: &Domain) -> Result<PairPotential, PotentialError> {
        if !self.domain.is_subset_of(target) {
            return Err(PotentialError::NotSubset);
        }
        let map = broadcast(target, &self.domain);
        Ok(PairPotential {
            domain: target.clone(),
            prob: map.iter().map(|&i| self.prob[i]).collect(),
            util: map.iter().map(|&i| self.util[i]).collect(),
        })
    }

    /// Fixes `v` to `state` and drops it from the domain.
    pub fn slice(&self, v: VarId, state: usize) -> Result<PairPotential, PotentialError> {
        let pos = self.domain.position(v).ok_or(PotentialError::NotInDomain(v))?;
        let stride = self.domain.stride(pos);
        let card = self.domain.cards[pos];
        let keep: Vec<usize> = (0..self.prob.len())
            .filter(|i| (i / stride) % card == state)
            .collect();
        Ok(PairPotential {
            domain: self.domain.without(v),
            prob: keep.iter().map(|&i| self.prob[i]).collect(),
            util: keep.iter().map(|&i| self.util[i]).collect(),
        })
    }

    /// `Σ φ·ψ` over the whole table.
    pub fn expected_mass(&self) -> f64 {
        self.prob.iter().zip(&self.util).map(|(p, u)| p * u).sum()
    }

    /// Debug dump: domain line, then `prob` and `util` rows in table order.
    pub fn dump(&self, id: &InfluenceDiagram) -> String {
        let names: Vec<&str> = self.domain.vars.iter().map(|v| id.name(*v)).collect();
        format!(
            "domain: [{}]\nprob: {}\nutil: {}\n",
            names.join(", "),
            join_values(&self.prob),
            join_values(&self.util)
        )
    }
}

fn join_values(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for PairPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self
            .domain
            .vars
            .iter()
            .zip(&self.domain.cards)
            .map(|(v, c)| format!("{}({c})", v.0))
            .collect();
        writeln!(f, "domain: [{}]", vars.join(", "))?;
        writeln!(f, "prob: {}", join_values(&self.prob))?;
        writeln!(f, "util: {}", join_values(&self.util))
    }
}

/// Multiplies probabilities and adds utilities over the union of both domains.
pub fn combine(p: &PairPotential, q: &PairPotential) -> Result<PairPotential, PotentialError> {
    let domain = p.domain.union(&q.domain)?;
    let ip = broadcast(&domain, &p.domain);
    let iq = broadcast(&domain, &q.domain);
    let prob = ip
        .iter()
        .zip(&iq)
        .map(|(&a, &b)| p.prob[a] * q.prob[b])
        .collect();
    let util = ip
        .iter()
        .zip(&iq)
        .map(|(&a, &b)| p.util[a] + q.util[b])
        .collect();
    Ok(PairPotential { domain, prob, util })
}

/// Sums a chance variable out: `φ' = Σφ`, `ψ' = Σφψ / φ'` with `0/0 = 0`.
pub fn sum_out(p: &PairPotential, x: VarId) -> Result<PairPotential, PotentialError> {
    if !p.domain.contains(x) {
        return Err(PotentialError::NotInDomain(x));
    }
    let domain = p.domain.without(x);
    let map = broadcast(&p.domain, &domain);
    let mut prob = vec![0.0; domain.size()];
    let mut mass = vec![0.0; domain.size()];
    for (i, &j) in map.iter().enumerate() {
        prob[j] += p.prob[i];
        mass[j] += p.prob[i] * p.util[i];
    }
    let util = prob
        .iter()
        .zip(&mass)
        .map(|(&pr, &m)| if pr == 0.0 { 0.0 } else { m / pr })
        .collect();
    Ok(PairPotential { domain, prob, util })
}

/// Maximizes a decision out, recording the chosen action per remaining configuration.
///
/// Entries with `φ = 0` (ruled out by evidence) are skipped whenever a positive
/// entry exists in the same row. Ties go to the lowest action index.
pub fn max_out(
    p: &PairPotential,
    d: VarId,
) -> Result<(PairPotential, ArgmaxTable), PotentialError> {
    let pos = p.domain.position(d).ok_or(PotentialError::NotInDomain(d))?;
    let card = p.domain.cards[pos];
    let stride = p.domain.stride(pos);
    let domain = p.domain.without(d);
    let map = broadcast(&p.domain, &domain);
    let n = domain.size();

    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![0.0f64; n];
    for (i, &j) in map.iter().enumerate() {
        let pr = p.prob[i];
        if pr > 0.0 {
            lo[j] = lo[j].min(pr);
            hi[j] = hi[j].max(pr);
        }
    }
    for j in 0..n {
        if hi[j] > 0.0 && hi[j] - lo[j] > DECISION_PROB_TOLERANCE * hi[j] {
            return Err(PotentialError::DecisionDependentProbability {
                decision: d,
                low: lo[j],
                high: hi[j],
            });
        }
    }

    let scale = p.util.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (i, &j) in map.iter().enumerate() {
        let eligible = hi[j] == 0.0 || p.prob[i] > 0.0;
        if !eligible {
            continue;
        }
        match best[j] {
            Some(b) if !strictly_better(p.util[i], p.util[b], scale) => {}
            _ => best[j] = Some(i),
        }
    }
    let chosen: Vec<usize> = best.into_iter().map(|b| b.unwrap_or(0)).collect();
    let prob = chosen.iter().map(|&i| p.prob[i]).collect();
    let util = chosen.iter().map(|&i| p.util[i]).collect();
    let actions = chosen.iter().map(|&i| (i / stride) % card).collect();
    Ok((
        PairPotential {
            domain: domain.clone(),
            prob,
            util,
        },
        ArgmaxTable {
            decision: d,
            domain,
            actions,
        },
    ))
}

/// Separator division: `φ / φ_s` with `0/0 = 0`, `ψ - ψ_s`.
pub fn divide(p: &PairPotential, sep: &PairPotential) -> Result<PairPotential, PotentialError> {
    if !sep.domain.is_subset_of(&p.domain) {
        return Err(PotentialError::NotSubset);
    }
    for v in &sep.domain.vars {
        if sep.domain.card_of(*v) != p.domain.card_of(*v) {
            return Err(PotentialError::CardinalityMismatch(
                *v,
                p.domain.card_of(*v).unwrap_or(0),
                sep.domain.card_of(*v).unwrap_or(0),
            ));
        }
    }
    let map = broadcast(&p.domain, &sep.domain);
    let mut prob = Vec::with_capacity(map.len());
    for (i, &j) in map.iter().enumerate() {
        let (num, den) = (p.prob[i], sep.prob[j]);
        prob.push(if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                return Err(PotentialError::InconsistentZero(num));
            }
        } else {
            num / den
        });
    }
    let util = map
        .iter()
        .enumerate()
        .map(|(i, &j)| p.util[i] - sep.util[j])
        .collect();
    Ok(PairPotential {
        domain: p.domain.clone(),
        prob,
        util,
    })
}

/// Zeroes every `φ` entry inconsistent with the evidence; `ψ` is untouched.
pub fn apply_evidence(p: &PairPotential, e: &Evidence) -> PairPotential {
    let observed: Vec<(usize, usize, usize)> = p
        .domain
        .vars
        .iter()
        .enumerate()
        .filter_map(|(pos, v)| e.get(*v).map(|s| (pos, s, p.domain.stride(pos))))
        .collect();
    if observed.is_empty() {
        return p.clone();
    }
    let mut out = p.clone();
    for (i, pr) in out.prob.iter_mut().enumerate() {
        let consistent = observed
            .iter()
            .all(|&(pos, s, stride)| (i / stride) % p.domain.cards[pos] == s);
        if !consistent {
            *pr = 0.0;
        }
    }
    out
}
