mod common;

use std::path::Path;
use std::time::Instant;

use common::*;
use mlgen::pipeline::{render_machine, BlockError};
use mlgen::{check, generate, generate_notebook, GenerateError, GenerateOptions, MappingConfig, Model, Provenance};
use serde_json::json;

fn run(model: &Model, mapping: &MappingConfig, root: &Path, options: &GenerateOptions) -> Result<Vec<u8>, GenerateError> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.ipynb");
    generate(model, mapping, root, &out, options)?;
    Ok(std::fs::read(out).unwrap())
}

#[test]
fn weather_matches_golden() {
    let start = Instant::now();
    let bytes = run(&weather_model(), &weather_mapping(), &weather_templates(), &GenerateOptions::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    let golden = std::fs::read(weather_dir().join("expected.ipynb")).unwrap();
    assert_eq!(String::from_utf8(bytes).unwrap(), String::from_utf8(golden).unwrap());
}

#[test]
fn report_contents() {
    let model = weather_model();
    let (_, report) =
        generate_notebook(&model, &weather_mapping(), &weather_templates(), &GenerateOptions::default()).unwrap();
    assert_eq!(report.machine, "Weather_Forecast");
    assert_eq!(report.contexts_processed, 6);
    assert_eq!(report.cells_emitted, 13);
    assert!(report.warnings.is_empty());
    let label = report.per_block.iter().find(|b| b.qualified_name == "P::Label_Log").unwrap();
    assert_eq!(label.mapping_provenance, Provenance::ByName);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["perBlock"][0]["mappingProvenance"], "byStereotype");
    assert_eq!(json["contextsProcessed"], 6);
}

#[test]
fn split_bindings() {
    let model = weather_model();
    let (reg, _, _) =
        render_machine(&model, &model.machines()[0], &weather_mapping(), &weather_templates(), None).unwrap();
    let snippet = reg.get(&qn("P::TrainSplit")).unwrap().snippet.as_ref().unwrap();
    assert!(snippet.body.contains("# TrainSplit: hold out 0.2 of merged_df"));
    assert!(snippet.body.contains("X = merged_df.drop(columns=[\"weather\"])"));
    assert!(snippet.body.contains("random_state=42"));
}

#[test]
fn unmapped_block_names_the_block() {
    let model = weather_model();
    let mut mapping = weather_mapping();
    mapping.stereotype_mappings.0.shift_remove("Join");
    let err = run(&model, &mapping, &weather_templates(), &GenerateOptions::default()).unwrap_err();
    assert!(matches!(&err, GenerateError::Block { block, source: BlockError::Mapping(_) } if block == "P::Merge_DF"));
    assert!(err.to_string().contains("P::Merge_DF"));
}

fn missing_path_model() -> Model {
    load(&json!({
        "stereotypes": [
            {"name": "ML", "kind": "ml-task"},
            {"name": "TextFile", "kind": "ml-task", "parents": ["ML"],
             "properties": [{"name": "Path", "type": "string", "mandatory": true}]}],
        "blocks": [{"qualifiedName": "P::Reader", "name": "Reader", "appliedStereotypes": [{"stereotype": "TextFile"}]}],
        "stateMachines": [{"name": "m", "states": [{"name": "s", "order": 0, "block": "P::Reader"}]}]
    }))
}

#[test]
fn mandatory_property_enforced_at_generation() {
    let dir = tempfile::tempdir().unwrap();
    write_templates(dir.path(), &[("read", "open(\"${(path, x)}\")")]);
    let mapping = MappingConfig::parse(
        br#"{"stereotypeMappings": {"TextFile": {"template": "read", "properties": {"Path": "path"}}}}"#,
    )
    .unwrap();
    let err = run(&missing_path_model(), &mapping, dir.path(), &GenerateOptions::default()).unwrap_err();
    assert!(matches!(&err, GenerateError::Block { source: BlockError::MandatoryMissing { property, .. }, .. }
        if property == "Path"), "{err}");

    let diags = check(&missing_path_model(), &mapping, dir.path());
    assert_eq!(diags.len(), 1, "{diags:?}");
    let text = diags[0].to_string();
    for needle in ["P::Reader", "TextFile", "Path"] {
        assert!(text.contains(needle), "{text}");
    }
}

#[test]
fn check_clean_fixture() {
    assert!(check(&weather_model(), &weather_mapping(), &weather_templates()).is_empty());
}

#[test]
fn check_reports_missing_template() {
    let mut mapping = weather_mapping();
    mapping.stereotype_mappings.0.get_mut("Join").unwrap().template = "nope".into();
    let diags = check(&weather_model(), &mapping, &weather_templates());
    assert!(diags.iter().any(|d| d.to_string().contains("nope")), "{diags:?}");
}

#[test]
fn check_reports_unused_variable_and_bad_command() {
    let mut mapping = weather_mapping();
    let entry = mapping.stereotype_mappings.0.get_mut("Join").unwrap();
    entry.properties.0.insert("On".into(), "not_in_template".into());
    entry.model_commands.0.insert("THIS.NAME".into(), "x".into());
    let diags = check(&weather_model(), &mapping, &weather_templates());
    let all: Vec<String> = diags.iter().map(ToString::to_string).collect();
    assert!(all.iter().any(|d| d.contains("not_in_template")), "{all:?}");
    assert!(all.iter().any(|d| d.contains("THIS.NAME")), "{all:?}");
}

/// Variants of the weather inputs, each either clean or broken in one way.
fn corpus() -> Vec<(&'static str, Model, MappingConfig)> {
    let base_model = weather_model();
    let base = weather_mapping();
    let mut out = vec![("clean", base_model.clone(), base.clone())];

    let mut m = base.clone();
    m.stereotype_mappings.0.shift_remove("CSV");
    out.push(("no CSV mapping", base_model.clone(), m));

    let mut m = base.clone();
    m.stereotype_mappings.0.get_mut("Train_Test_Split").unwrap().template = "missing/template".into();
    out.push(("missing template", base_model.clone(), m));

    let mut m = base.clone();
    m.stereotype_mappings.0.get_mut("Join").unwrap().model_commands.0.shift_remove("CONNECTED[Nr=1].BLOCK.OUTPUT");
    out.push(("unbound mandatory variable", base_model.clone(), m));

    let mut m = base.clone();
    m.stereotype_mappings
        .0
        .get_mut("Join")
        .unwrap()
        .model_commands
        .0
        .insert("CONNECTED[Nr=5].BLOCK.OUTPUT".into(), "spare".into());
    out.push(("command out of range", base_model.clone(), m));

    let mut m = base.clone();
    m.name_mappings.0.shift_remove("Label_Log");
    out.push(("stereotype fallback", base_model.clone(), m));

    let mut doc: serde_json::Value = serde_json::from_str(&base_model.to_json()).unwrap();
    doc["blocks"][0]["appliedStereotypes"][0]["values"] = json!({});
    out.push(("missing Path", load(&doc), base.clone()));

    let mut doc: serde_json::Value = serde_json::from_str(&base_model.to_json()).unwrap();
    doc["blocks"][4]["appliedStereotypes"][0]["values"]["Target"] = json!("label");
    out.push(("changed target", load(&doc), base));
    out
}

#[test]
fn check_clean_implies_generate_succeeds() {
    for (label, model, mapping) in corpus() {
        let diags = check(&model, &mapping, &weather_templates());
        let result = generate_notebook(&model, &mapping, &weather_templates(), &GenerateOptions::default());
        if diags.is_empty() {
            assert!(result.is_ok(), "{label}: check was clean but generate failed: {:?}", result.err());
        }
        if let Err(e) = result {
            assert!(!diags.is_empty(), "{label}: generate failed ({e}) but check was clean");
        }
    }
}

#[test]
fn corpus_has_both_outcomes() {
    let outcomes: Vec<bool> = corpus()
        .iter()
        .map(|(_, model, mapping)| check(model, mapping, &weather_templates()).is_empty())
        .collect();
    assert!(outcomes.iter().any(|c| *c) && outcomes.iter().any(|c| !*c));
}

#[test]
fn warnings_are_not_fatal_unless_strict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.ipynb");
    let options = GenerateOptions {
        validate_cmd: Some("false".into()),
        ..Default::default()
    };
    let report = generate(&weather_model(), &weather_mapping(), &weather_templates(), &out, &options).unwrap();
    assert_eq!(report.warnings.len(), 1);
    std::fs::remove_file(&out).unwrap();

    let strict = GenerateOptions { strict: true, ..options };
    let err = generate(&weather_model(), &weather_mapping(), &weather_templates(), &out, &strict).unwrap_err();
    assert!(matches!(err, GenerateError::Strict(ref w) if w.len() == 1));
    assert!(out.exists());
}

#[test]
fn kwargs_without_anchor_warns() {
    let dir = tempfile::tempdir().unwrap();
    write_templates(dir.path(), &[("plain", "x = 1\n")]);
    let model = load(&model_doc(
        vec![],
        vec![json!({"qualifiedName": "P::K", "name": "K", "appliedStereotypes": [{"stereotype": "Task"}],
                    "attributes": [{"name": "**extra", "value": 1}]})],
        vec![machine("m", &["K"])],
    ));
    let mapping = MappingConfig::parse(br#"{"stereotypeMappings": {"Task": {"template": "plain"}}}"#).unwrap();
    let (_, report) = generate_notebook(&model, &mapping, dir.path(), &GenerateOptions::default()).unwrap();
    assert_eq!(report.warnings.len(), 1);
    assert!(report.warnings[0].contains("**kwargs"));
}

#[test]
fn machine_selection() {
    let dir = tempfile::tempdir().unwrap();
    write_templates(dir.path(), &[("t", "v_${name} = 1\n")]);
    let model = load(&model_doc(
        vec![],
        vec![task_block("A", &[]), task_block("B", &[])],
        vec![machine("first", &["A"]), machine("second", &["B"])],
    ));
    let mapping = MappingConfig::parse(
        br#"{"stereotypeMappings": {"Task": {"template": "t", "modelCommands": {"THIS.BLOCK.NAME": "name"}}}}"#,
    )
    .unwrap();
    let err = generate_notebook(&model, &mapping, dir.path(), &GenerateOptions::default()).unwrap_err();
    assert_eq!(err, GenerateError::MachineRequired(2));
    let options = GenerateOptions {
        machine: Some("second".into()),
        ..Default::default()
    };
    let (bytes, report) = generate_notebook(&model, &mapping, dir.path(), &options).unwrap();
    assert_eq!(report.machine, "second");
    assert!(String::from_utf8(bytes).unwrap().contains("v_B = 1"));
    let options = GenerateOptions {
        machine: Some("third".into()),
        ..Default::default()
    };
    assert_eq!(
        generate_notebook(&model, &mapping, dir.path(), &options).unwrap_err(),
        GenerateError::UnknownMachine("third".into())
    );
}

#[test]
fn generation_is_deterministic() {
    let options = GenerateOptions::default();
    let a = generate_notebook(&weather_model(), &weather_mapping(), &weather_templates(), &options).unwrap();
    let b = generate_notebook(&weather_model(), &weather_mapping(), &weather_templates(), &options).unwrap();
    assert_eq!(a, b);
}
