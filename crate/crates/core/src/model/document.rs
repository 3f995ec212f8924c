//! The serialized diagram document and its validation rules.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Row sums may deviate from 1 by at most this much.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Chance,
    Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VariableKind,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptDocument {
    pub child: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityDocument {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub values: Vec<f64>,
}

/// Raw, unvalidated form of an influence diagram as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub variables: Vec<Variable>,
    pub cpts: Vec<CptDocument>,
    pub utilities: Vec<UtilityDocument>,
    #[serde(default)]
    pub decision_order: Vec<String>,
    pub information_sets: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub observation_lower_bounds: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateVariable,
    States,
    UnknownVariable,
    Cpt,
    TableLength,
    ValueRange,
    Normalization,
    Cycle,
    DecisionOrder,
    Partition,
    LowerBound,
    Legality,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::DuplicateVariable => "duplicate-variable",
            Rule::States => "states",
            Rule::UnknownVariable => "unknown-variable",
            Rule::Cpt => "cpt",
            Rule::TableLength => "table-length",
            Rule::ValueRange => "value-range",
            Rule::Normalization => "normalization",
            Rule::Cycle => "cycle",
            Rule::DecisionOrder => "decision-order",
            Rule::Partition => "partition",
            Rule::LowerBound => "lower-bound",
            Rule::Legality => "legality",
        }
    }
}

/// One broken invariant, naming the rule and the offending elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub elements: Vec<String>,
    pub message: String,
}

impl Violation {
    fn new(rule: Rule, elements: &[&str], message: impl Into<String>) -> Self {
        Violation {
            rule,
            elements: elements.iter().map(|s| s.to_string()).collect(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule.as_str(), self.message)
    }
}

/// Checks every structural and numeric invariant of a document.
///
/// Returns an empty list iff the document describes a valid influence diagram.
pub fn validate_document(doc: &ModelDocument) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut vars: HashMap<&str, &Variable> = HashMap::new();
    for v in &doc.variables {
        if vars.insert(v.name.as_str(), v).is_some() {
            out.push(Violation::new(
                Rule::DuplicateVariable,
                &[&v.name],
                format!("variable `{}` is declared more than once", v.name),
            ));
        }
        if v.states.len() < 2 {
            out.push(Violation::new(
                Rule::States,
                &[&v.name],
                format!("variable `{}` needs at least two states", v.name),
            ));
        }
        let mut seen = HashSet::new();
        for s in &v.states {
            if !seen.insert(s.as_str()) {
                out.push(Violation::new(
                    Rule::States,
                    &[&v.name, s],
                    format!("variable `{}` repeats state `{}`", v.name, s),
                ));
            }
        }
    }

    let card = |name: &str| vars.get(name).map(|v| v.states.len());
    let unknown = |owner: &str, name: &str, out: &mut Vec<Violation>| {
        out.push(Violation::new(
            Rule::UnknownVariable,
            &[owner, name],
            format!("`{owner}` references unknown variable `{name}`"),
        ));
    };

    // CPTs
    let mut cpt_children: HashMap<&str, usize> = HashMap::new();
    let mut arcs: Vec<(&str, &str)> = Vec::new();
    for cpt in &doc.cpts {
        let child = cpt.child.as_str();
        match vars.get(child) {
            None => {
                unknown("cpts", child, &mut out);
                continue;
            }
            Some(v) if v.kind == VariableKind::Decision => {
                out.push(Violation::new(
                    Rule::Cpt,
                    &[child],
                    format!("decision `{child}` cannot have a CPT"),
                ));
                continue;
            }
            Some(_) => {}
        }
        *cpt_children.entry(child).or_default() += 1;
        let mut ok = true;
        let mut seen = HashSet::new();
        for p in &cpt.parents {
            if card(p).is_none() {
                unknown(&format!("cpt({child})"), p, &mut out);
                ok = false;
            } else if !seen.insert(p.as_str()) || p == child {
                out.push(Violation::new(
                    Rule::Cpt,
                    &[child, p],
                    format!("CPT of `{child}` lists `{p}` invalidly as a parent"),
                ));
                ok = false;
            } else {
                arcs.push((p.as_str(), child));
            }
        }
        if !ok {
            continue;
        }
        let child_card = card(child).unwrap_or(0);
        let rows: usize = cpt.parents.iter().filter_map(|p| card(p)).product();
        let expected = rows * child_card;
        if cpt.values.len() != expected {
            out.push(Violation::new(
                Rule::TableLength,
                &[child],
                format!(
                    "CPT of `{child}` has {} values, expected {expected}",
                    cpt.values.len()
                ),
            ));
            continue;
        }
        if let Some(bad) = cpt
            .values
            .iter()
            .position(|x| !x.is_finite() || *x < 0.0 || *x > 1.0)
        {
            out.push(Violation::new(
                Rule::ValueRange,
                &[child],
                format!(
                    "CPT of `{child}` has value {} at index {bad} outside [0, 1]",
                    cpt.values[bad]
                ),
            ));
            continue;
        }
        if child_card == 0 {
            continue;
        }
        for (row, chunk) in cpt.values.chunks(child_card).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                out.push(Violation::new(
                    Rule::Normalization,
                    &[child],
                    format!("CPT of `{child}` row {row} sums to {sum}, not 1"),
                ));
            }
        }
    }
    for v in &doc.variables {
        if v.kind == VariableKind::Chance {
            match cpt_children.get(v.name.as_str()).copied().unwrap_or(0) {
                0 => out.push(Violation::new(
                    Rule::Cpt,
                    &[&v.name],
                    format!("chance variable `{}` has no CPT", v.name),
                )),
                1 => {}
                _ => out.push(Violation::new(
                    Rule::Cpt,
                    &[&v.name],
                    format!("chance variable `{}` has more than one CPT", v.name),
                )),
            }
        }
    }

    // utilities
    let mut utility_names = HashSet::new();
    for u in &doc.utilities {
        if !utility_names.insert(u.name.as_str()) || vars.contains_key(u.name.as_str()) {
            out.push(Violation::new(
                Rule::DuplicateVariable,
                &[&u.name],
                format!("utility name `{}` is not unique", u.name),
            ));
        }
        let mut ok = true;
        let mut seen = HashSet::new();
        for p in &u.parents {
            if card(p).is_none() {
                unknown(&format!("utility({})", u.name), p, &mut out);
                ok = false;
            } else if !seen.insert(p.as_str()) {
                out.push(Violation::new(
                    Rule::Cpt,
                    &[&u.name, p],
                    format!("utility `{}` repeats parent `{p}`", u.name),
                ));
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let expected: usize = u.parents.iter().filter_map(|p| card(p)).product();
        if u.values.len() != expected {
            out.push(Violation::new(
                Rule::TableLength,
                &[&u.name],
                format!(
                    "utility `{}` has {} values, expected {expected}",
                    u.name,
                    u.values.len()
                ),
            ));
        } else if u.values.iter().any(|x| !x.is_finite()) {
            out.push(Violation::new(
                Rule::ValueRange,
                &[&u.name],
                format!("utility `{}` has a non-finite value", u.name),
            ));
        }
    }

    if let Some(cycle) = find_cycle(&doc.variables, &arcs) {
        let refs: Vec<&str> = cycle.iter().map(String::as_str).collect();
        out.push(Violation::new(
            Rule::Cycle,
            &refs,
            format!("directed cycle through {}", cycle.join(" -> ")),
        ));
    }

    // decision order
    let decisions: Vec<&Variable> = doc
        .variables
        .iter()
        .filter(|v| v.kind == VariableKind::Decision)
        .collect();
    let mut decision_index: HashMap<&str, usize> = HashMap::new();
    for (k, d) in doc.decision_order.iter().enumerate() {
        match vars.get(d.as_str()) {
            None => unknown("decision_order", d, &mut out),
            Some(v) if v.kind != VariableKind::Decision => out.push(Violation::new(
                Rule::DecisionOrder,
                &[d],
                format!("`{d}` in decision_order is not a decision"),
            )),
            Some(_) => {
                if decision_index.insert(d.as_str(), k + 1).is_some() {
                    out.push(Violation::new(
                        Rule::DecisionOrder,
                        &[d],
                        format!("decision `{d}` appears twice in decision_order"),
                    ));
                }
            }
        }
    }
    for d in &decisions {
        if !decision_index.contains_key(d.name.as_str()) {
            out.push(Violation::new(
                Rule::DecisionOrder,
                &[&d.name],
                format!("decision `{}` is missing from decision_order", d.name),
            ));
        }
    }

    // information sets
    let n = doc.decision_order.len();
    if doc.information_sets.len() != n + 1 {
        out.push(Violation::new(
            Rule::Partition,
            &[],
            format!(
                "expected {} information sets for {n} decisions, found {}",
                n + 1,
                doc.information_sets.len()
            ),
        ));
    }
    let mut placement: HashMap<&str, usize> = HashMap::new();
    for (k, set) in doc.information_sets.iter().enumerate() {
        for x in set {
            match vars.get(x.as_str()) {
                None => unknown(&format!("I_{k}"), x, &mut out),
                Some(v) if v.kind != VariableKind::Chance => out.push(Violation::new(
                    Rule::Partition,
                    &[x],
                    format!("decision `{x}` cannot belong to information set I_{k}"),
                )),
                Some(_) => {
                    if let Some(prev) = placement.insert(x.as_str(), k) {
                        out.push(Violation::new(
                            Rule::Partition,
                            &[x],
                            format!("chance variable `{x}` appears in both I_{prev} and I_{k}"),
                        ));
                    }
                }
            }
        }
    }
    for v in &doc.variables {
        if v.kind == VariableKind::Chance && !placement.contains_key(v.name.as_str()) {
            out.push(Violation::new(
                Rule::Partition,
                &[&v.name],
                format!("chance variable `{}` is in no information set", v.name),
            ));
        }
    }

    // lower bounds and the decision-ancestor rule
    for (x, &l) in &doc.observation_lower_bounds {
        match (vars.get(x.as_str()), placement.get(x.as_str())) {
            (None, _) => unknown("observation_lower_bounds", x, &mut out),
            (Some(v), _) if v.kind != VariableKind::Chance => out.push(Violation::new(
                Rule::LowerBound,
                &[x],
                format!("lower bound given for decision `{x}`"),
            )),
            (Some(_), Some(&m)) if l > m => out.push(Violation::new(
                Rule::LowerBound,
                &[x],
                format!("lower bound I_{l} of `{x}` exceeds its modeled set I_{m}"),
            )),
            _ => {}
        }
    }
    let parents_of: HashMap<&str, Vec<&str>> = {
        let mut m: HashMap<&str, Vec<&str>> = HashMap::new();
        for (p, c) in &arcs {
            m.entry(*c).or_default().push(*p);
        }
        m
    };
    for v in &doc.variables {
        let Some(&m) = placement.get(v.name.as_str()) else {
            continue;
        };
        let l = doc
            .observation_lower_bounds
            .get(&v.name)
            .copied()
            .unwrap_or(m)
            .min(m);
        for anc in ancestors(&v.name, &parents_of) {
            if let Some(&k) = decision_index.get(anc) {
                if k > l {
                    out.push(Violation::new(
                        Rule::Legality,
                        &[&v.name, anc],
                        format!(
                            "`{}` is observable from I_{l} but decision `{anc}` (D_{k}) influences it",
                            v.name
                        ),
                    ));
                }
            }
        }
    }

    out
}

fn ancestors<'a>(x: &str, parents_of: &HashMap<&'a str, Vec<&'a str>>) -> Vec<&'a str> {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut stack: Vec<&str> = parents_of.get(x).cloned().unwrap_or_default();
    let mut out = Vec::new();
    while let Some(p) = stack.pop() {
        if p == x || !seen.insert(p) {
            continue;
        }
        out.push(p);
        if let Some(ps) = parents_of.get(p) {
            stack.extend(ps.iter().copied());
        }
    }
    out.sort_unstable();
    out
}

fn find_cycle(variables: &[Variable], arcs: &[(&str, &str)]) -> Option<Vec<String>> {
    let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
    for (p, c) in arcs {
        succ.entry(*p).or_default().push(*c);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: HashMap<&str, u8> = HashMap::new();
    for v in variables {
        let start = v.name.as_str();
        if state.get(start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut path: Vec<(&str, usize)> = vec![(start, 0)];
        state.insert(start, 1);
        while let Some(&mut (node, ref mut next)) = path.last_mut() {
            let kids = succ.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if *next < kids.len() {
                let kid = kids[*next];
                *next += 1;
                match state.get(kid).copied().unwrap_or(0) {
                    0 => {
                        state.insert(kid, 1);
                        path.push((kid, 0));
                    }
                    1 => {
                        let from = path.iter().position(|(n, _)| *n == kid).unwrap_or(0);
                        let mut cycle: Vec<String> =
                            path[from..].iter().map(|(n, _)| n.to_string()).collect();
                        cycle.push(kid.to_string());
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state.insert(node, 2);
                path.pop();
            }
        }
    }
    None
}
