mod common;

use common::*;
use mlgen::model::{AttributeValue, ModelError, Primitive, StereotypeKind};
use mlgen::Model;
use proptest::prelude::*;
use serde_json::json;

#[test]
fn minimal_model_one_block_no_machine() {
    let doc = json!({"blocks": [{"qualifiedName": "P::Only", "name": "Only"}]});
    let model = load(&doc);
    assert_eq!(model.blocks().count(), 1);
    assert!(model.machines().is_empty());
}

#[test]
fn unresolved_part_names_missing_block() {
    let doc = json!({"blocks": [{"qualifiedName": "Q::B", "name": "B", "parts": ["Q::Missing"]}]});
    let err = Model::load(doc.to_string().as_bytes()).unwrap_err();
    assert!(matches!(&err, ModelError::Unresolved { name, .. } if name == "Q::Missing"), "{err}");
    assert!(err.to_string().contains("Q::Missing"));
}

#[test]
fn weather_fixture_loads() {
    let model = weather_model();
    assert!(model.blocks().count() >= 5);
    assert_eq!(model.machines().len(), 1);
    let machine = &model.machines()[0];
    assert_eq!(machine.states.len(), 5);
    let orders: Vec<i64> = machine.states.iter().map(|s| s.order).collect();
    assert!(orders.windows(2).all(|w| w[0] < w[1]), "{orders:?}");
    let sensor = model.block(&qn("P::Sensor_Log")).unwrap();
    assert_eq!(sensor.applied_stereotypes[0].stereotype, "CSV");
}

#[test]
fn csv_inherits_path_from_text_file() {
    let model = weather_model();
    let sensor = model.block(&qn("P::Sensor_Log")).unwrap();
    let props = model.effective_properties(sensor, "CSV").unwrap();
    let names: Vec<&str> = props.keys().copied().collect();
    assert_eq!(names, ["Path", "Separator"]);
    assert_eq!(props["Path"].declared_by, "TextFile");
    assert_eq!(
        props["Path"].assigned,
        Some(&AttributeValue::Primitive(Primitive::String("./weather.csv".into())))
    );
    assert_eq!(props["Separator"].assigned, None);
    assert_eq!(
        props["Separator"].value(),
        Some(AttributeValue::Primitive(Primitive::String(",".into())))
    );
}

#[test]
fn stereotype_without_parents_or_properties_is_empty() {
    let doc = json!({
        "stereotypes": [{"name": "Tag", "kind": "data"}],
        "blocks": [{"qualifiedName": "P::B", "name": "B", "appliedStereotypes": [{"stereotype": "Tag"}]}]
    });
    let model = load(&doc);
    let block = model.block(&qn("P::B")).unwrap();
    assert!(model.effective_properties(block, "Tag").unwrap().is_empty());
}

#[test]
fn not_applied_stereotype_is_an_error() {
    let model = weather_model();
    let sensor = model.block(&qn("P::Sensor_Log")).unwrap();
    assert!(matches!(
        model.effective_properties(sensor, "Join"),
        Err(ModelError::NotApplied { .. })
    ));
}

#[test]
fn diamond_inheritance_sees_the_override() {
    let doc = model_doc(
        vec![
            json!({"name": "A", "kind": "ml-task", "parents": ["ML"],
                   "properties": [{"name": "p", "type": "string", "default": "from A"}]}),
            json!({"name": "B", "kind": "ml-task", "parents": ["A"]}),
            json!({"name": "C", "kind": "ml-task", "parents": ["A"],
                   "properties": [{"name": "p", "type": "string", "default": "from C"}]}),
            json!({"name": "D", "kind": "ml-task", "parents": ["B", "C"]}),
        ],
        vec![json!({"qualifiedName": "P::X", "name": "X", "appliedStereotypes": [{"stereotype": "D"}]})],
        vec![],
    );
    let model = load(&doc);
    let x = model.block(&qn("P::X")).unwrap();
    let props = model.effective_properties(x, "D").unwrap();
    assert_eq!(props["p"].declared_by, "C");
    assert_eq!(props["p"].value(), Some(AttributeValue::Primitive(Primitive::String("from C".into()))));
    let order: Vec<&str> = model.linearize("D").iter().map(|s| s.name.as_str()).collect();
    assert_eq!(order, ["D", "B", "C", "A", "ML"]);
}

#[test]
fn connected_inputs_in_declaration_order() {
    let model = weather_model();
    let split = model.block(&qn("P::TrainSplit")).unwrap();
    let names: Vec<&str> = model.connected_inputs(split).iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["Merge_DF"]);
    let merge = model.block(&qn("P::Merge_DF")).unwrap();
    let names: Vec<&str> = model.connected_inputs(merge).iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["Format_Date", "Label_Log"]);
    let sensor = model.block(&qn("P::Sensor_Log")).unwrap();
    assert!(model.connected_inputs(sensor).is_empty());
}

#[test]
fn load_rejections() {
    let cases = [
        (
            json!({"stereotypes": [
                {"name": "ML", "kind": "ml-task", "parents": ["X"]},
                {"name": "X", "kind": "ml-task", "parents": ["ML"]}]}),
            "cycle",
        ),
        (json!({"stereotypes": [{"name": "Lone", "kind": "ml-task"}]}), "ML"),
        (
            json!({"blocks": [
                {"qualifiedName": "P::A", "name": "A", "parts": ["P::B"]},
                {"qualifiedName": "P::B", "name": "B", "parts": ["P::A"]}]}),
            "cycle",
        ),
        (
            json!({"blocks": [
                {"qualifiedName": "P::A", "name": "A"},
                {"qualifiedName": "P::A", "name": "A"}]}),
            "duplicate",
        ),
        (
            json!({"blocks": [{"qualifiedName": "P::A", "name": "A"}],
                   "stateMachines": [{"name": "m", "states": [{"name": "s", "order": -1, "block": "P::A"}]}]}),
            "order",
        ),
        (
            json!({"blocks": [{"qualifiedName": "P::A", "name": "A"}],
                   "stateMachines": [{"name": "m", "states": [
                       {"name": "s", "order": 1, "block": "P::A"},
                       {"name": "t", "order": 1, "block": "P::A"}]}]}),
            "order",
        ),
        (
            json!({"stereotypes": [{"name": "ML", "kind": "ml-task",
                   "properties": [{"name": "p", "type": "string", "mandatory": true, "default": "x"}]}]}),
            "default",
        ),
        (
            json!({"stereotypes": [{"name": "ML", "kind": "ml-task",
                   "properties": [{"name": "**p", "type": "string"}]}]}),
            "**",
        ),
        (json!({"blocks": [], "extra": 1}), "unknown field"),
        (json!([]), "object"),
        (json!({"blocks": [["P::A", "A"]]}), "blocks.0"),
        (
            json!({"stereotypes": [{"name": "ML", "kind": "ml-task",
                   "properties": [{"name": "p", "type": "reference"}]}],
                   "blocks": [{"qualifiedName": "P::A", "name": "A",
                   "appliedStereotypes": [{"stereotype": "ML", "values": {"p": ["P::A"]}}]}]}),
            "values.p",
        ),
        (json!({"blocks": [{"qualifiedName": "P::A", "name": "A", "attributes": [
                    {"name": "d", "value": "x", "stereotypes": ["ML"]}]}],
                "stereotypes": [{"name": "ML", "kind": "ml-task"}]}), "data"),
    ];
    for (doc, needle) in cases {
        let err = Model::load(doc.to_string().as_bytes()).expect_err(&doc.to_string());
        assert!(
            err.to_string().to_lowercase().contains(&needle.to_lowercase()),
            "`{err}` should mention `{needle}`"
        );
    }
}

#[test]
fn malformed_json_reports_location() {
    let err = Model::load(b"{\n  \"blocks\": [\n    {,}\n  ]\n}").unwrap_err();
    assert!(matches!(err, ModelError::Parse { line: 3, .. }), "{err}");
}

#[test]
fn data_stereotype_on_attribute() {
    let model = weather_model();
    let sensor = model.block(&qn("P::Sensor_Log")).unwrap();
    let date = sensor.attribute("date").unwrap();
    assert_eq!(date.stereotypes, ["Datetime"]);
    assert_eq!(model.stereotype("Datetime").unwrap().kind, StereotypeKind::Data);
}

#[test]
fn kwargs_attributes() {
    let model = weather_model();
    let classifier = model.block(&qn("P::Classifier")).unwrap();
    let kwargs: Vec<(&str, &AttributeValue)> = classifier.kwargs().collect();
    assert_eq!(kwargs.len(), 2);
    assert_eq!(kwargs[0].0, "random_state");
    assert_eq!(kwargs[1].0, "max_depth");
}

#[test]
fn mandatory_violations_reported_not_rejected() {
    let doc = json!({
        "stereotypes": [
            {"name": "ML", "kind": "ml-task"},
            {"name": "TextFile", "kind": "ml-task", "parents": ["ML"],
             "properties": [{"name": "Path", "type": "string", "mandatory": true}]}],
        "blocks": [{"qualifiedName": "P::In", "name": "In", "appliedStereotypes": [{"stereotype": "TextFile"}]}]
    });
    let model = load(&doc);
    let block = model.block(&qn("P::In")).unwrap();
    assert_eq!(model.missing_mandatory(block), [("TextFile", "Path")]);
}

#[test]
fn weather_round_trip() {
    let model = weather_model();
    let again = Model::load(model.to_json().as_bytes()).unwrap();
    assert_eq!(model, again);
}

fn arb_model() -> impl Strategy<Value = serde_json::Value> {
    let names = prop::collection::vec("[A-Z][a-z]{0,6}", 1..6);
    (names, any::<u64>()).prop_map(|(mut names, seed)| {
        names.sort();
        names.dedup();
        let mut rng = seed;
        let mut next = move || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            rng >> 33
        };
        let blocks: Vec<serde_json::Value> = names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                // parts only point to earlier blocks: acyclic by construction
                let parts: Vec<String> = (0..i)
                    .filter(|_| next() % 3 == 0)
                    .map(|j| format!("P::{}", names[j]))
                    .collect();
                let mut attrs = vec![json!({"name": "n", "value": next() % 1000})];
                if i > 0 {
                    attrs.push(json!({"name": "r", "ref": format!("P::{}", names[0])}));
                }
                if next() % 2 == 0 {
                    attrs.push(json!({"name": "**kw", "value": "\"v\""}));
                }
                json!({
                    "qualifiedName": format!("P::{n}"),
                    "name": n,
                    "appliedStereotypes": [{"stereotype": "Task", "values": {"Flag": next() % 2 == 0}}],
                    "attributes": attrs,
                    "parts": parts,
                    "comments": [format!("about {n}")],
                })
            })
            .collect();
        let states: Vec<serde_json::Value> = names
            .iter()
            .enumerate()
            .map(|(i, n)| json!({"name": format!("s{i}"), "order": i * 10, "block": format!("P::{n}")}))
            .collect();
        json!({
            "stereotypes": [
                {"name": "ML", "kind": "ml-task"},
                {"name": "Task", "kind": "ml-task", "parents": ["ML"],
                 "properties": [{"name": "Flag", "type": "boolean", "default": false}]}],
            "blocks": blocks,
            "stateMachines": [{"name": "m", "states": states}],
        })
    })
}

proptest! {
    #[test]
    fn load_serialize_load_is_stable(doc in arb_model()) {
        let model = load(&doc);
        let text = model.to_json();
        let again = Model::load(text.as_bytes()).unwrap();
        prop_assert_eq!(&model, &again);
        prop_assert_eq!(text, again.to_json());
    }

    #[test]
    fn applied_stereotypes_have_effective_properties(doc in arb_model()) {
        let model = load(&doc);
        for block in model.blocks() {
            for applied in &block.applied_stereotypes {
                prop_assert!(model.effective_properties(block, &applied.stereotype).is_ok());
            }
        }
    }
}
