use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;

const FIG4: &str = include_str!("../../../../fixtures/fig4.json");
const FIG8: &str = include_str!("../../../../fixtures/fig8.json");

fn names(id: &InfluenceDiagram, vs: &BTreeSet<VarId>) -> BTreeSet<String> {
    vs.iter().map(|v| id.name(*v).to_string()).collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn doc(text: &str) -> ModelDocument {
    serde_json::from_str(text).unwrap()
}

fn chain_doc() -> ModelDocument {
    doc(r#"{
        "variables": [
            {"name": "A", "kind": "chance", "states": ["a0", "a1"]},
            {"name": "B", "kind": "chance", "states": ["b0", "b1"]},
            {"name": "C", "kind": "chance", "states": ["c0", "c1"]},
            {"name": "Z", "kind": "chance", "states": ["z0", "z1"]}
        ],
        "cpts": [
            {"child": "A", "values": [0.5, 0.5]},
            {"child": "B", "parents": ["A"], "values": [0.9, 0.1, 0.2, 0.8]},
            {"child": "C", "parents": ["B"], "values": [0.3, 0.7, 0.6, 0.4]},
            {"child": "Z", "values": [0.1, 0.9]}
        ],
        "utilities": [{"name": "U", "parents": ["C"], "values": [0, 1]}],
        "information_sets": [["A", "B", "C", "Z"]]
    }"#)
}

#[test]
fn single_chance_variable() {
    let id = parse_model(include_str!("../../../../fixtures/single_chance.json")).unwrap();
    assert_eq!(id.num_decisions(), 0);
    assert_eq!(id.information_sets().len(), 1);
    assert_eq!(id.information_sets()[0], vec![id.lookup("A").unwrap()]);
}

#[test]
fn fig4_information_sets() {
    let id = parse_model(FIG4).unwrap();
    let sets: Vec<BTreeSet<String>> = id
        .information_sets()
        .iter()
        .map(|s| s.iter().map(|v| id.name(*v).to_string()).collect())
        .collect();
    assert_eq!(
        sets,
        vec![set(&[]), set(&["C"]), set(&["A", "E"]), set(&["B"])]
    );
    assert_eq!(id.num_decisions(), 3);
}

#[test]
fn row_sum_off_is_reported_with_row() {
    let mut d = chain_doc();
    d.cpts[1].values = vec![0.9, 0.1, 0.2, 0.7];
    let v = validate_model(&d);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].rule, Rule::Normalization);
    assert!(v[0].elements.contains(&"B".to_string()));
    assert!(v[0].message.contains("row 1"), "{}", v[0].message);
    assert!(matches!(
        InfluenceDiagram::from_document(&d),
        Err(ModelError::Invalid(_))
    ));
}

#[test]
fn syntax_error_reports_position() {
    match parse_model("{\n  \"variables\": [,\n}") {
        Err(ModelError::Syntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn table_length_unknown_reference_and_cycle() {
    let mut d = chain_doc();
    d.cpts[2].values.pop();
    assert_eq!(validate_model(&d)[0].rule, Rule::TableLength);

    let mut d = chain_doc();
    d.cpts[2].parents = vec!["Q".into()];
    assert_eq!(validate_model(&d)[0].rule, Rule::UnknownVariable);

    let mut d = chain_doc();
    d.cpts[0].parents = vec!["C".into()];
    d.cpts[0].values = vec![0.5, 0.5, 0.5, 0.5];
    assert!(validate_model(&d).iter().any(|v| v.rule == Rule::Cycle));
}

#[test]
fn valid_fixtures_have_no_violations() {
    for text in [FIG4, FIG8] {
        assert!(validate_model(&doc(text)).is_empty());
    }
}

#[test]
fn variable_in_two_information_sets() {
    let mut d = doc(FIG4);
    d.information_sets[2].push("C".into());
    let v = validate_model(&d);
    assert!(v.iter().any(|v| v.rule == Rule::Partition), "{v:?}");
}

#[test]
fn lower_bound_before_influencing_decision() {
    // A's CPT has D_2 as a parent, so A cannot be observed before D_2.
    let mut d = doc(FIG4);
    d.observation_lower_bounds.insert("A".into(), 0);
    let v = validate_model(&d);
    assert!(!v.is_empty());
    assert!(v.iter().all(|v| v.rule == Rule::Legality), "{v:?}");
    assert!(v.iter().any(|v| v.elements.contains(&"D_2".to_string())));
}

#[test]
fn pasts_of_fig4() {
    let id = parse_model(FIG4).unwrap();
    let sc = ObservationScenario::modeled(&id);
    assert_eq!(names(&id, &id.past_of(1, &sc).unwrap()), set(&[]));
    assert_eq!(names(&id, &id.past_of(2, &sc).unwrap()), set(&["D_1", "C"]));
    assert_eq!(
        names(&id, &id.past_of(3, &sc).unwrap()),
        set(&["D_1", "C", "D_2", "A", "E"])
    );
    assert!(matches!(
        id.past_of(4, &sc),
        Err(ModelError::IndexOutOfRange { .. })
    ));
    assert!(id.past_of(0, &sc).is_err());
}

#[test]
fn markov_blankets() {
    let id = InfluenceDiagram::from_document(&chain_doc()).unwrap();
    let v = |n| id.lookup(n).unwrap();
    assert!(id.markov_blanket(v("Z")).is_empty());
    assert_eq!(names(&id, &id.markov_blanket(v("B"))), set(&["A", "C"]));

    let id = parse_model(FIG4).unwrap();
    // E <- B, D_2: the blanket of B includes E's other parent
    let b = id.lookup("B").unwrap();
    assert_eq!(names(&id, &id.markov_blanket(b)), set(&["E", "D_2"]));
    let c = id.lookup("C").unwrap();
    assert_eq!(names(&id, &id.markov_blanket(c)), set(&["D_1", "A", "D_2"]));
}

#[test]
fn v_structure_blanket() {
    let d = doc(r#"{
        "variables": [
            {"name": "A", "kind": "chance", "states": ["0", "1"]},
            {"name": "B", "kind": "chance", "states": ["0", "1"]},
            {"name": "C", "kind": "chance", "states": ["0", "1"]}
        ],
        "cpts": [
            {"child": "A", "values": [0.5, 0.5]},
            {"child": "B", "values": [0.5, 0.5]},
            {"child": "C", "parents": ["A", "B"], "values": [1, 0, 0, 1, 0, 1, 1, 0]}
        ],
        "utilities": [{"name": "U", "parents": ["C"], "values": [0, 1]}],
        "information_sets": [["A", "B", "C"]]
    }"#);
    let id = InfluenceDiagram::from_document(&d).unwrap();
    let a = id.lookup("A").unwrap();
    assert_eq!(names(&id, &id.markov_blanket(a)), set(&["B", "C"]));
}

#[test]
fn observation_intervals() {
    let id = parse_model(FIG8).unwrap();
    let v = |n| id.lookup(n).unwrap();
    // h: interval [I_1; I_4]
    assert_eq!(id.observation_legal(v("h"), 2).unwrap(), Ok(()));
    assert_eq!(id.observation_legal(v("h"), 4).unwrap(), Ok(()));
    let err = id.observation_legal(v("h"), 0).unwrap().unwrap_err();
    assert_eq!(err.reason, IllegalReason::BelowLowerBound { lower: 1 });
    assert!(err.to_string().contains("below lower bound"));

    // k is a child of D_3
    let err = id.observation_legal(v("k"), 1).unwrap().unwrap_err();
    assert_eq!(
        err.reason,
        IllegalReason::DecisionInfluences {
            decision: "D_3".into(),
            index: 3
        }
    );
    assert!(err.to_string().contains("decision D_3 (D_3) influences k"));

    assert!(matches!(
        id.observation_legal(v("D_1"), 0),
        Err(ModelError::NotChance(_))
    ));
    assert!(matches!(
        id.observation_legal(v("h"), 9),
        Err(ModelError::IndexOutOfRange { .. })
    ));
}

#[test]
fn evidence_parsing() {
    let id = parse_model(FIG4).unwrap();
    let e = Evidence::parse(&id, "C=c1, D_1=t0").unwrap();
    assert_eq!(e.len(), 2);
    assert_eq!(e.get(id.lookup("C").unwrap()), Some(1));
    match Evidence::parse(&id, "C=C1") {
        Err(ModelError::UnknownState { variable, legal, .. }) => {
            assert_eq!(variable, "C");
            assert_eq!(legal, vec!["c0", "c1"]);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        Evidence::parse(&id, "C=c0,C=c1"),
        Err(ModelError::DuplicateAssignment(_))
    ));
    assert!(matches!(
        Evidence::parse(&id, "C"),
        Err(ModelError::MalformedEvidence(_))
    ));
}

#[test]
fn scenario_moves() {
    let id = parse_model(FIG4).unwrap();
    let b = id.lookup("B").unwrap();
    let sc = ObservationScenario::modeled(&id).with_placement(&id, b, 0).unwrap();
    assert_eq!(sc.placement(b), Some(0));
    let a = id.lookup("A").unwrap();
    assert!(matches!(
        ObservationScenario::modeled(&id).with_placement(&id, a, 1),
        Err(ModelError::Illegal(_))
    ));
    // delaying is allowed
    let sc = ObservationScenario::modeled(&id).with_placement(&id, a, 3).unwrap();
    assert_eq!(sc.placement(a), Some(3));
}

fn arb_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n)
}

proptest! {
    #[test]
    fn round_trip_is_exact(ps in arb_values(4), us in prop::collection::vec(-1e3f64..1e3, 8)) {
        let mut d = doc(FIG4);
        // rows of A | C, D_2 as (p, 1 - p)
        d.cpts.iter_mut().find(|c| c.child == "A").unwrap().values =
            ps.iter().flat_map(|p| [*p, 1.0 - *p]).collect();
        d.utilities[0].values = us;
        let id = InfluenceDiagram::from_document(&d).unwrap();
        let text = serialize_model(&id);
        let again = parse_model(&text).unwrap();
        prop_assert_eq!(&again, &id);
        prop_assert_eq!(serialize_model(&again), text);
    }
}

#[test]
fn fixtures_round_trip() {
    for text in [FIG4, FIG8] {
        let id = parse_model(text).unwrap();
        assert_eq!(parse_model(&serialize_model(&id)).unwrap(), id);
    }
}

#[test]
fn pasts_are_monotone_and_modeled_placement_is_legal() {
    for text in [FIG4, FIG8] {
        let id = parse_model(text).unwrap();
        let sc = ObservationScenario::modeled(&id);
        for i in 1..id.num_decisions() {
            let a = id.past_of(i, &sc).unwrap();
            let b = id.past_of(i + 1, &sc).unwrap();
            assert!(a.is_subset(&b) && a != b);
        }
        for v in id.var_ids().filter(|v| !id.is_decision(*v)) {
            let m = id.modeled_placement(v).unwrap();
            assert_eq!(id.observation_legal(v, m).unwrap(), Ok(()));
        }
        for x in id.var_ids() {
            for y in id.markov_blanket(x) {
                assert!(id.markov_blanket(y).contains(&x));
            }
        }
    }
}
