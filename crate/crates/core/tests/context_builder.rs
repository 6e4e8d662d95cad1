mod common;

use std::collections::{HashMap, HashSet};

use common::*;
use mlgen::context::ContextError;
use mlgen::{CommandValue, ContextRegistry, Model};
use proptest::prelude::*;
use serde_json::json;

fn order(reg: &ContextRegistry<'_>) -> Vec<String> {
    reg.iter().map(|c| c.block_ref.simple_name().to_string()).collect()
}

#[test]
fn single_input_post_order() {
    let model = load(&model_doc(
        vec![],
        vec![task_block("A", &["B"]), task_block("B", &[])],
        vec![machine("m", &["A"])],
    ));
    let reg = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
    assert_eq!(order(&reg), ["B", "A"]);
    let a = reg.get(&qn("P::A")).unwrap();
    assert_eq!(a.execution_order, 1);
    assert_eq!(a.connected, [qn("P::B")]);
    assert_eq!(reg.get(&qn("P::B")).unwrap().execution_order, 0);
}

#[test]
fn diamond_visits_shared_input_once() {
    let model = load(&model_doc(
        vec![],
        vec![
            task_block("D", &["B", "C"]),
            task_block("B", &["A"]),
            task_block("C", &["A"]),
            task_block("A", &[]),
        ],
        vec![machine("m", &["D"])],
    ));
    let reg = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
    assert_eq!(order(&reg), ["A", "B", "C", "D"]);
    let orders: Vec<usize> = reg.iter().map(|c| c.execution_order).collect();
    assert_eq!(orders, [0, 1, 2, 3]);
}

#[test]
fn weather_contexts() {
    let model = weather_model();
    let reg = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
    assert!(reg.len() >= 5);
    assert_eq!(
        order(&reg),
        ["Sensor_Log", "Format_Date", "Label_Log", "Merge_DF", "TrainSplit", "Classifier"]
    );
    let split = reg.get(&qn("P::TrainSplit")).unwrap();
    assert_eq!(split.connected, [qn("P::Merge_DF")]);
    assert_eq!(split.comments.len(), 1);
    let sensor = reg.get(&qn("P::Sensor_Log")).unwrap();
    assert_eq!(sensor.comments[0], "# Weather prediction\nGenerated from the weather station model.");
}

#[test]
fn states_in_ascending_order_regardless_of_listing() {
    let model = load(&model_doc(
        vec![],
        vec![task_block("First", &[]), task_block("Second", &["First"]), task_block("Third", &[])],
        vec![json!({"name": "m", "states": [
            {"name": "c", "order": 30, "block": "P::Third"},
            {"name": "a", "order": 5, "block": "P::First"},
            {"name": "b", "order": 7, "block": "P::Second"},
            {"name": "again", "order": 40, "block": "P::First"}
        ]})],
    ));
    let reg = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
    assert_eq!(order(&reg), ["First", "Second", "Third"]);
}

#[test]
fn attribute_resolution() {
    let model = weather_model();
    let reg = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
    let split = reg.get(&qn("P::TrainSplit")).unwrap();
    assert_eq!(reg.resolve_attribute(split, "Test_Size").unwrap(), CommandValue::Text("0.2".into()));
    assert_eq!(reg.resolve_attribute(split, "Shuffle").unwrap(), CommandValue::Text("True".into()));
    let err = reg.resolve_attribute(split, "Nope").unwrap_err();
    assert!(matches!(&err, ContextError::MissingAttribute { block, attribute }
        if block == "P::TrainSplit" && attribute == "Nope"));
    let forest = reg.get(&qn("P::Classifier")).unwrap();
    assert_eq!(reg.resolve_attribute(forest, "N_Estimators").unwrap(), CommandValue::Text("100".into()));
}

#[test]
fn reference_resolves_to_block_name() {
    let model = load(&model_doc(
        vec![],
        vec![
            task_block("Merge_DF", &[]),
            json!({"qualifiedName": "P::User", "name": "User",
                   "appliedStereotypes": [{"stereotype": "Task"}],
                   "attributes": [{"name": "input", "ref": "P::Merge_DF"}]}),
        ],
        vec![machine("m", &["User"])],
    ));
    let reg = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
    let user = reg.get(&qn("P::User")).unwrap();
    assert_eq!(reg.resolve_attribute(user, "input").unwrap(), CommandValue::Text("Merge_DF".into()));
    // the referenced block is not an input, so it has no context of its own
    assert!(reg.get(&qn("P::Merge_DF")).is_none());
}

#[test]
fn build_is_deterministic() {
    let model = weather_model();
    let a = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
    let b = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
    assert_eq!(a.iter().collect::<Vec<_>>(), b.iter().collect::<Vec<_>>());
}

/// Random DAG: block i may take any block j < i as input.
fn arb_dag() -> impl Strategy<Value = (Model, usize)> {
    (2usize..12)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(prop::collection::vec(any::<bool>(), n), n),
                prop::collection::vec(0..n, 1..4),
            )
        })
        .prop_map(|(n, edges, states)| {
            let names: Vec<String> = (0..n).map(|i| format!("B{i}")).collect();
            let blocks = (0..n)
                .map(|i| {
                    let parts: Vec<&str> = (0..i).filter(|&j| edges[i][j]).map(|j| names[j].as_str()).collect();
                    task_block(&names[i], &parts)
                })
                .collect();
            let state_blocks: Vec<&str> = states.iter().map(|&i| names[i].as_str()).collect();
            (load(&model_doc(vec![], blocks, vec![machine("m", &state_blocks)])), n)
        })
}

fn reachable(model: &Model) -> HashSet<String> {
    let mut seen = HashSet::new();
    let mut stack: Vec<mlgen::QualifiedName> = model.machines()[0].states.iter().map(|s| s.block.clone()).collect();
    while let Some(q) = stack.pop() {
        if seen.insert(q.to_string()) {
            stack.extend(model.block(&q).unwrap().parts.iter().cloned());
        }
    }
    seen
}

proptest! {
    #[test]
    fn registry_invariants((model, _n) in arb_dag()) {
        let reg = ContextRegistry::build(&model, &model.machines()[0]).unwrap();
        let orders: HashMap<String, usize> =
            reg.iter().map(|c| (c.block_ref.to_string(), c.execution_order)).collect();
        let mut seen: Vec<usize> = orders.values().copied().collect();
        seen.sort();
        prop_assert_eq!(seen, (0..reg.len()).collect::<Vec<_>>());
        for c in reg.iter() {
            for d in &c.connected {
                prop_assert!(orders[&d.to_string()] < c.execution_order);
            }
        }
        let expected = reachable(&model);
        prop_assert_eq!(orders.keys().cloned().collect::<HashSet<_>>(), expected);
    }
}
