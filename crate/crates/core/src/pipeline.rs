//! Generation driver: contexts -> mapping selection -> template -> bindings
//! -> rendering -> composition -> file -> validation.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;
use thiserror::Error;

use crate::command::{eval_command, parse_command, CommandParseError, CommandValue, EvalError};
use crate::context::{ContextError, ContextRegistry};
use crate::mapping::{MappingConfig, MappingError, Provenance};
use crate::model::{Model, QualifiedName, StateMachine};
use crate::notebook::{compose, validate_syntax, NotebookError};
use crate::template::{Snippet, Template, TemplateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("cannot parse model command `{command}`: {source}")]
    CommandParse {
        command: String,
        source: CommandParseError,
    },
    #[error("model command `{command}` failed: {source}")]
    CommandEval { command: String, source: EvalError },
    #[error("mandatory property `{property}` of stereotype `{stereotype}` has no value")]
    MandatoryMissing { stereotype: String, property: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("no state machine named `{0}`")]
    UnknownMachine(String),
    #[error("the model has no state machine")]
    NoMachine,
    #[error("the model has {0} state machines; choose one by name")]
    MachineRequired(usize),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("block `{block}`: {source}")]
    Block { block: String, source: BlockError },
    #[error(transparent)]
    Notebook(#[from] NotebookError),
    #[error("cannot write {}: {message}", .path.display())]
    Write { path: PathBuf, message: String },
    #[error("{} warning(s) in strict mode: {}", .0.len(), .0.join("; "))]
    Strict(Vec<String>),
}

#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    pub machine: Option<String>,
    pub kernel: Option<String>,
    pub validate_cmd: Option<String>,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockReport {
    pub qualified_name: String,
    pub template: String,
    pub mapping_provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerationReport {
    pub machine: String,
    pub contexts_processed: usize,
    pub cells_emitted: usize,
    pub warnings: Vec<String>,
    pub per_block: Vec<BlockReport>,
}

impl GenerationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

impl fmt::Display for GenerationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "machine: {}", self.machine)?;
        writeln!(f, "contexts processed: {}", self.contexts_processed)?;
        writeln!(f, "cells emitted: {}", self.cells_emitted)?;
        for b in &self.per_block {
            writeln!(f, "  {} -> {} ({})", b.qualified_name, b.template, b.mapping_provenance)?;
        }
        writeln!(f, "warnings: {}", self.warnings.len())?;
        for w in &self.warnings {
            writeln!(f, "  {w}")?;
        }
        Ok(())
    }
}

/// Machine named `name`, or the only machine when `name` is absent.
pub fn select_machine<'m>(model: &'m Model, name: Option<&str>) -> Result<&'m StateMachine, GenerateError> {
    match name {
        Some(n) => model
            .machine(n)
            .ok_or_else(|| GenerateError::UnknownMachine(n.to_string())),
        None => match model.machines() {
            [] => Err(GenerateError::NoMachine),
            [only] => Ok(only),
            many => Err(GenerateError::MachineRequired(many.len())),
        },
    }
}

/// Caches parsed templates by name for one run.
struct TemplateCache<'a> {
    root: &'a Path,
    loaded: HashMap<String, Template>,
}

impl<'a> TemplateCache<'a> {
    fn new(root: &'a Path) -> Self {
        TemplateCache {
            root,
            loaded: HashMap::new(),
        }
    }

    fn get(&mut self, name: &str) -> Result<&Template, TemplateError> {
        if !self.loaded.contains_key(name) {
            let t = Template::load(self.root, name)?;
            self.loaded.insert(name.to_string(), t);
        }
        Ok(&self.loaded[name])
    }
}

struct Rendered {
    snippet: Snippet,
    report: BlockReport,
    warnings: Vec<String>,
}

fn render_context(
    registry: &ContextRegistry<'_>,
    name: &QualifiedName,
    mapping: &MappingConfig,
    templates: &mut TemplateCache<'_>,
) -> Result<Rendered, BlockError> {
    let model = registry.model();
    let ctx = registry
        .get(name)
        .ok_or_else(|| ContextError::UnknownContext(name.to_string()))?;
    let block = registry.block(ctx)?;

    if let Some((stereotype, property)) = model.missing_mandatory(block).into_iter().next() {
        return Err(BlockError::MandatoryMissing {
            stereotype: stereotype.to_string(),
            property: property.to_string(),
        });
    }

    let selection = mapping.select(model, block)?;
    let entry = selection.entry;
    let template = templates.get(&entry.template)?;

    let mut bindings: IndexMap<String, String> = IndexMap::new();
    for (attribute, variable) in entry.properties.iter() {
        if !ctx.attributes.contains_key(attribute) {
            // unbound: the template default applies, or rendering reports it
            continue;
        }
        let value = registry.resolve_attribute(ctx, attribute)?;
        bindings.insert(variable.clone(), value.into_text().expect("attributes resolve to text"));
    }
    for (command, variable) in entry.model_commands.iter() {
        let ast = parse_command(command).map_err(|source| BlockError::CommandParse {
            command: command.clone(),
            source,
        })?;
        let value = eval_command(&ast, ctx, registry)
            .and_then(|v| v.into_text())
            .map_err(|source| BlockError::CommandEval {
                command: command.clone(),
                source,
            })?;
        bindings.insert(variable.clone(), value);
    }
    for (variable, value) in mapping.constants.iter() {
        bindings.entry(variable.clone()).or_insert_with(|| value.clone());
    }

    let mut kwargs = Vec::new();
    for (key, value) in block.kwargs() {
        let text = registry
            .resolve_value(value)
            .map_err(|target| ContextError::DanglingReference {
                block: block.qualified_name.to_string(),
                attribute: format!("**{key}"),
                target,
            })?;
        kwargs.push((key.to_string(), text));
    }
    let mut warnings = Vec::new();
    if !kwargs.is_empty() && !template.has_kwargs_anchor() {
        warnings.push(format!(
            "block `{}`: template `{}` has no `**kwargs` anchor; {} extra attribute(s) dropped",
            block.qualified_name,
            template.name,
            kwargs.len()
        ));
    }

    let rendered = template.render(&bindings, &kwargs, &block.qualified_name)?;
    Ok(Rendered {
        snippet: Snippet::from_rendered(&rendered, block.qualified_name.clone()),
        report: BlockReport {
            qualified_name: block.qualified_name.to_string(),
            template: entry.template.clone(),
            mapping_provenance: selection.provenance,
        },
        warnings,
    })
}

/// Contexts of `machine` with snippets attached, in execution order. With
/// `until`, rendering stops before that block (its inputs are rendered).
pub fn render_machine<'m>(
    model: &'m Model,
    machine: &StateMachine,
    mapping: &MappingConfig,
    template_root: &Path,
    until: Option<&QualifiedName>,
) -> Result<(ContextRegistry<'m>, Vec<BlockReport>, Vec<String>), GenerateError> {
    let mut registry = ContextRegistry::build(model, machine)?;
    let mut templates = TemplateCache::new(template_root);
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    let names: Vec<QualifiedName> = registry.iter().map(|c| c.block_ref.clone()).collect();
    for name in names {
        if until == Some(&name) {
            break;
        }
        let rendered = render_context(&registry, &name, mapping, &mut templates).map_err(|source| {
            GenerateError::Block {
                block: name.to_string(),
                source,
            }
        })?;
        registry.attach_snippet(&name, rendered.snippet)?;
        reports.push(rendered.report);
        warnings.extend(rendered.warnings);
    }
    Ok((registry, reports, warnings))
}

/// Runs generation in memory and returns the notebook bytes with the report
/// (validation warnings not yet included).
pub fn generate_notebook(
    model: &Model,
    mapping: &MappingConfig,
    template_root: &Path,
    options: &GenerateOptions,
) -> Result<(Vec<u8>, GenerationReport), GenerateError> {
    let machine = select_machine(model, options.machine.as_deref())?;
    let (registry, per_block, warnings) = render_machine(model, machine, mapping, template_root, None)?;
    let notebook = compose(&registry, mapping, options.kernel.as_deref())?;
    let report = GenerationReport {
        machine: machine.name.clone(),
        contexts_processed: registry.len(),
        cells_emitted: notebook.cells.len(),
        warnings,
        per_block,
    };
    Ok((notebook.serialize(), report))
}

/// Full generation: writes `out`, then validates it. Warnings never fail
/// the run unless `options.strict` is set, in which case the file is still
/// written and [`GenerateError::Strict`] is returned.
pub fn generate(
    model: &Model,
    mapping: &MappingConfig,
    template_root: &Path,
    out: &Path,
    options: &GenerateOptions,
) -> Result<GenerationReport, GenerateError> {
    let (bytes, mut report) = generate_notebook(model, mapping, template_root, options)?;
    std::fs::write(out, &bytes).map_err(|e| GenerateError::Write {
        path: out.to_path_buf(),
        message: e.to_string(),
    })?;
    report
        .warnings
        .extend(validate_syntax(out, options.validate_cmd.as_deref()));
    if options.strict && !report.warnings.is_empty() {
        return Err(GenerateError::Strict(report.warnings));
    }
    Ok(report)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalRequestError {
    #[error("no block named `{0}`")]
    UnknownBlock(String),
    #[error("block `{0}` is not reachable from any state")]
    Unreachable(String),
    #[error(transparent)]
    Parse(#[from] CommandParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
}

impl From<ContextError> for EvalRequestError {
    fn from(e: ContextError) -> Self {
        EvalRequestError::Generate(e.into())
    }
}

/// Evaluates `command` with `block` as `THIS`, under real generation
/// conditions: the block's machine (the named one, or the first that reaches
/// it) is built, and with `rendering` every predecessor snippet is rendered
/// first so `OUTPUT` resolves.
pub fn eval_for_block(
    model: &Model,
    block: &QualifiedName,
    command: &str,
    machine: Option<&str>,
    rendering: Option<(&MappingConfig, &Path)>,
) -> Result<CommandValue, EvalRequestError> {
    if model.block(block).is_none() {
        return Err(EvalRequestError::UnknownBlock(block.to_string()));
    }
    let ast = parse_command(command)?;
    let candidates: Vec<&StateMachine> = match machine {
        Some(name) => vec![select_machine(model, Some(name))?],
        None => model.machines().iter().collect(),
    };
    let mut registry = None;
    for m in candidates {
        let r = ContextRegistry::build(model, m)?;
        if r.get(block).is_some() {
            registry = Some(match rendering {
                Some((mapping, root)) => render_machine(model, m, mapping, root, Some(block))?.0,
                None => r,
            });
            break;
        }
    }
    let registry = registry.ok_or_else(|| EvalRequestError::Unreachable(block.to_string()))?;
    let current = registry.get(block).expect("registry contains the block");
    Ok(eval_command(&ast, current, &registry)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

fn diag(subject: impl Into<String>, message: impl fmt::Display) -> Diagnostic {
    Diagnostic {
        subject: subject.into(),
        message: message.to_string(),
    }
}

/// Static checks over every state machine without writing anything. If the
/// static pass is clean, each machine is also rendered in memory and any
/// failure is reported.
pub fn check(model: &Model, mapping: &MappingConfig, template_root: &Path) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut templates = TemplateCache::new(template_root);

    for (label, entry) in mapping.entries() {
        match templates.get(&entry.template) {
            Ok(t) => {
                let vars = t.variables();
                for target in entry.targets() {
                    if !vars.contains_key(target) {
                        out.push(diag(
                            &label,
                            format!("variable `{target}` is not used by template `{}`", entry.template),
                        ));
                    }
                }
            }
            Err(e) => out.push(diag(&label, e)),
        }
        for command in entry.model_commands.keys() {
            if let Err(e) = parse_command(command) {
                out.push(diag(&label, format!("cannot parse model command `{command}`: {e}")));
            }
        }
    }

    let mut registries = Vec::new();
    for machine in model.machines() {
        match ContextRegistry::build(model, machine) {
            Ok(r) => registries.push(r),
            Err(e) => out.push(diag(format!("machine `{}`", machine.name), e)),
        }
    }
    let mut seen: IndexSet<QualifiedName> = IndexSet::new();
    for registry in &registries {
        for ctx in registry.iter() {
            if !seen.insert(ctx.block_ref.clone()) {
                continue;
            }
            let Some(block) = model.block(&ctx.block_ref) else { continue };
            let subject = format!("block `{}`", block.qualified_name);
            for (stereotype, property) in model.missing_mandatory(block) {
                out.push(diag(
                    &subject,
                    format!("mandatory property `{property}` of stereotype `{stereotype}` has no value"),
                ));
            }
            let selection = match mapping.select(model, block) {
                Ok(s) => s,
                Err(e) => {
                    out.push(diag(&subject, e));
                    continue;
                }
            };
            let entry = selection.entry;
            let Ok(template) = templates.get(&entry.template) else { continue };
            for (variable, mandatory) in template.variables() {
                if !mandatory || mapping.constants.contains_key(variable) {
                    continue;
                }
                let by_command = entry.model_commands.values().any(|v| v == variable);
                let by_property = entry
                    .properties
                    .iter()
                    .any(|(attr, v)| v == variable && ctx.attributes.contains_key(attr));
                if !by_command && !by_property {
                    out.push(diag(
                        &subject,
                        format!("template `{}` requires variable `{variable}`, which nothing binds", template.name),
                    ));
                }
            }
        }
    }

    if out.is_empty() {
        for machine in model.machines() {
            if let Err(e) = render_machine(model, machine, mapping, template_root, None) {
                out.push(diag(format!("machine `{}`", machine.name), e));
            }
        }
    }
    out
}
