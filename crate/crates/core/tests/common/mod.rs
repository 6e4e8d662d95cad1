#![allow(dead_code)]

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use mlgen::command::{Accessor, ChainStep, ConnectedSelector, Scope, Source, StepKind};
use mlgen::{CommandAst, MappingConfig, Model, QualifiedName};
use proptest::prelude::*;
use serde_json::{json, Value};

pub fn weather_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/weather")
}

pub fn weather_model() -> Model {
    Model::load(&std::fs::read(weather_dir().join("weather.model.json")).unwrap()).unwrap()
}

pub fn weather_mapping() -> MappingConfig {
    MappingConfig::parse(&std::fs::read(weather_dir().join("mapping.json")).unwrap()).unwrap()
}

pub fn weather_templates() -> PathBuf {
    weather_dir().join("templates")
}

pub fn qn(s: &str) -> QualifiedName {
    s.parse().unwrap()
}

/// A model document with the `ML` root and a `Task` stereotype already
/// declared.
pub fn model_doc(extra_stereotypes: Vec<Value>, blocks: Vec<Value>, machines: Vec<Value>) -> Value {
    let mut stereotypes = vec![
        json!({"name": "ML", "kind": "ml-task"}),
        json!({"name": "Task", "kind": "ml-task", "parents": ["ML"]}),
    ];
    stereotypes.extend(extra_stereotypes);
    json!({"stereotypes": stereotypes, "blocks": blocks, "stateMachines": machines})
}

/// Block `P::<name>` with the `Task` stereotype and the given parts.
pub fn task_block(name: &str, parts: &[&str]) -> Value {
    let parts: Vec<String> = parts.iter().map(|p| format!("P::{p}")).collect();
    json!({
        "qualifiedName": format!("P::{name}"),
        "name": name,
        "appliedStereotypes": [{"stereotype": "Task"}],
        "parts": parts,
    })
}

/// One machine whose states link the given blocks in order 0, 1, ...
pub fn machine(name: &str, blocks: &[&str]) -> Value {
    let states: Vec<Value> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| json!({"name": format!("s{i}"), "order": i, "block": format!("P::{b}")}))
        .collect();
    json!({"name": name, "states": states})
}

pub fn load(doc: &Value) -> Model {
    Model::load(doc.to_string().as_bytes()).unwrap()
}

pub fn write_templates(root: &Path, templates: &[(&str, &str)]) {
    for (name, text) in templates {
        let path = root.join(format!("{name}.tmpl"));
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, text).unwrap();
    }
}

pub fn arb_string() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z_][A-Za-z0-9_]{0,8}",
        "\\PC{0,6}",
        "[\"\\\\.\\[\\]{}:,= \t]{0,5}",
    ]
}

pub fn arb_selector() -> impl Strategy<Value = ConnectedSelector> {
    (
        prop::option::of(arb_string()),
        0usize..5,
        prop::option::of(arb_string()),
        prop::option::of(prop::collection::vec((arb_string(), arb_string()), 0..3)),
        prop::option::of(arb_string()),
    )
        .prop_map(|(name, nr, stereotype_name, attrs, output_name)| ConnectedSelector {
            name,
            nr,
            stereotype_name,
            attribute_value: attrs.map(|pairs| pairs.into_iter().collect::<IndexMap<_, _>>()),
            output_name,
        })
}

pub fn arb_index() -> impl Strategy<Value = Option<usize>> {
    prop::option::of(0usize..20)
}

pub fn arb_ast() -> impl Strategy<Value = CommandAst> {
    let source = prop_oneof![Just(Source::This), arb_selector().prop_map(Source::Connected)];
    let scope = prop_oneof![Just(Scope::Block), arb_string().prop_map(Scope::Stereotype)];
    let accessor = prop_oneof![
        Just(Accessor::Name),
        Just(Accessor::Attributes),
        arb_string().prop_map(Accessor::StereotypeOfAttribute),
        Just(Accessor::Output),
    ];
    let step = prop_oneof![
        Just(StepKind::Attributes),
        arb_string().prop_map(StepKind::StereotypeOfAttribute)
    ];
    let steps = prop::collection::vec((step, arb_index()), 0..4);
    (source, scope, accessor, arb_index(), steps, any::<bool>(), arb_index()).prop_map(
        |(source, scope, accessor, accessor_index, steps, terminal_name, name_index)| {
            let mut chain: Vec<ChainStep> = Vec::new();
            if accessor.allows_chain() {
                chain = steps.into_iter().map(|(kind, index)| ChainStep { kind, index }).collect();
                if terminal_name {
                    chain.push(ChainStep { kind: StepKind::Name, index: name_index });
                }
            }
            CommandAst {
                source,
                scope,
                accessor,
                accessor_index,
                chain,
            }
        },
    )
}

