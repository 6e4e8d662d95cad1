use serde::Serialize;
use thiserror::Error;

use super::ast::*;
use crate::context::{BlockContext, ContextError, ContextRegistry};
use crate::model::{AttributeValue, Block, StereotypeDef};

/// Result of evaluating a command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum CommandValue {
    Text(String),
    List(Vec<CommandValue>),
}

impl CommandValue {
    /// Text for template substitution; lists must be index-selected first.
    pub fn into_text(self) -> Result<String, EvalError> {
        match self {
            CommandValue::Text(t) => Ok(t),
            CommandValue::List(items) => Err(EvalError::Unindexed(items.len())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("`{selector}` matches no input of block `{block}`")]
    NoMatch { selector: String, block: String },
    #[error("index {index} out of range for {len} element(s)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("stereotype `{stereotype}` is not applied to block `{block}`")]
    NotApplied { block: String, stereotype: String },
    #[error("block `{block}` has no attribute `{attribute}`")]
    MissingAttribute { block: String, attribute: String },
    #[error("OUTPUT of block `{0}` requested before its snippet was rendered")]
    NotRendered(String),
    #[error("snippet of block `{0}` declares no output variable")]
    NoOutput(String),
    #[error("list value with {0} element(s) needs an index selector")]
    Unindexed(usize),
    #[error("cannot navigate into {0}")]
    NotNavigable(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0} is not a list")]
    NotAList(String),
    #[error("reference to unknown block `{0}`")]
    Dangling(String),
    #[error(transparent)]
    Context(#[from] ContextError),
}

enum Cursor<'m> {
    Block(&'m Block),
    Stereotype(&'m Block, &'m StereotypeDef),
    Data(&'m StereotypeDef),
    DataList(Vec<&'m StereotypeDef>),
    Values(Vec<AttributeValue>),
    Value(AttributeValue),
    Output(String),
    Text(String),
}

/// Splits a tuple target like `a, b, c` at top-level commas.
fn split_targets(text: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(current.trim().to_string());
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    parts.push(current.trim().to_string());
    parts
}

fn pick<T>(mut items: Vec<T>, index: usize) -> Result<T, EvalError> {
    let len = items.len();
    if index >= len {
        return Err(EvalError::IndexOutOfRange { index, len });
    }
    Ok(items.swap_remove(index))
}

struct Evaluator<'r, 'm> {
    registry: &'r ContextRegistry<'m>,
}

impl<'r, 'm> Evaluator<'r, 'm> {
    fn select_source(&self, source: &Source, current: &'r BlockContext) -> Result<&'r BlockContext, EvalError> {
        let Source::Connected(sel) = source else {
            return Ok(current);
        };
        let candidates = connected_candidates(self.registry, current, sel)?;
        if candidates.is_empty() {
            return Err(EvalError::NoMatch {
                selector: sel.to_string(),
                block: current.block_ref.to_string(),
            });
        }
        pick(candidates, sel.nr)
    }

    fn attribute_values(&self, block: &'m Block) -> Cursor<'m> {
        Cursor::Values(
            block
                .attributes
                .iter()
                .filter(|a| !a.is_kwarg())
                .map(|a| a.value.clone())
                .collect(),
        )
    }

    fn data_stereotypes(&self, block: &'m Block, attribute: &str) -> Result<Cursor<'m>, EvalError> {
        let model = self.registry.model();
        let attr = block.attribute(attribute).ok_or_else(|| EvalError::MissingAttribute {
            block: block.qualified_name.to_string(),
            attribute: attribute.to_string(),
        })?;
        Ok(Cursor::DataList(
            attr.stereotypes
                .iter()
                .filter_map(|s| model.stereotype(s))
                .collect(),
        ))
    }

    fn data_defaults(&self, def: &'m StereotypeDef) -> Cursor<'m> {
        Cursor::Values(
            self.registry
                .model()
                .effective_definitions(&def.name)
                .values()
                .filter_map(|(p, _)| p.default.clone().map(AttributeValue::Primitive))
                .collect(),
        )
    }

    fn accessor(&self, ctx: &BlockContext, cursor: Cursor<'m>, accessor: &Accessor) -> Result<Cursor<'m>, EvalError> {
        let model = self.registry.model();
        match (accessor, cursor) {
            (Accessor::Output, _) => {
                let snippet = ctx
                    .snippet
                    .as_ref()
                    .ok_or_else(|| EvalError::NotRendered(ctx.block_ref.to_string()))?;
                snippet
                    .output_var
                    .clone()
                    .map(Cursor::Output)
                    .ok_or_else(|| EvalError::NoOutput(ctx.block_ref.to_string()))
            }
            (Accessor::Name, Cursor::Block(b)) => Ok(Cursor::Text(b.name.clone())),
            (Accessor::Name, Cursor::Stereotype(_, s)) => Ok(Cursor::Text(s.name.clone())),
            (Accessor::Attributes, Cursor::Block(b)) => Ok(self.attribute_values(b)),
            (Accessor::Attributes, Cursor::Stereotype(b, s)) => {
                let props = model
                    .effective_properties(b, &s.name)
                    .map_err(|_| EvalError::NotApplied {
                        block: b.qualified_name.to_string(),
                        stereotype: s.name.clone(),
                    })?;
                Ok(Cursor::Values(props.values().filter_map(|p| p.value()).collect()))
            }
            (Accessor::StereotypeOfAttribute(a), Cursor::Block(b)) => self.data_stereotypes(b, a),
            (Accessor::StereotypeOfAttribute(_), Cursor::Stereotype(..)) => Err(EvalError::Unsupported(
                "STEREOTYPEofATTRIBUTE requires BLOCK scope".into(),
            )),
            _ => unreachable!("scope cursors are Block or Stereotype"),
        }
    }

    fn index(&self, cursor: Cursor<'m>, index: usize) -> Result<Cursor<'m>, EvalError> {
        match cursor {
            Cursor::Values(v) => pick(v, index).map(Cursor::Value),
            Cursor::DataList(v) => pick(v, index).map(Cursor::Data),
            Cursor::Output(o) => pick(split_targets(&o), index).map(Cursor::Text),
            Cursor::Text(t) => Err(EvalError::NotAList(format!("text `{t}`"))),
            Cursor::Value(_) => Err(EvalError::NotAList("an attribute value".into())),
            Cursor::Data(d) => Err(EvalError::NotAList(format!("stereotype `{}`", d.name))),
            Cursor::Block(_) | Cursor::Stereotype(..) => Err(EvalError::NotAList("an element".into())),
        }
    }

    /// Turns the cursor into a single navigable element for a chain step.
    fn element(&self, cursor: Cursor<'m>) -> Result<Cursor<'m>, EvalError> {
        match cursor {
            Cursor::Value(AttributeValue::Reference { target }) => self
                .registry
                .model()
                .block(&target)
                .map(Cursor::Block)
                .ok_or_else(|| EvalError::Dangling(target.to_string())),
            Cursor::Value(AttributeValue::Primitive(p)) => {
                Err(EvalError::NotNavigable(format!("primitive value `{}`", p.render())))
            }
            Cursor::DataList(mut v) if v.len() == 1 => Ok(Cursor::Data(v.remove(0))),
            Cursor::DataList(v) => Err(EvalError::Unindexed(v.len())),
            Cursor::Values(v) => Err(EvalError::Unindexed(v.len())),
            c @ (Cursor::Block(_) | Cursor::Data(_)) => Ok(c),
            Cursor::Stereotype(_, s) => Err(EvalError::NotNavigable(format!("stereotype `{}`", s.name))),
            Cursor::Output(t) | Cursor::Text(t) => Err(EvalError::NotNavigable(format!("text `{t}`"))),
        }
    }

    fn step(&self, cursor: Cursor<'m>, step: &StepKind) -> Result<Cursor<'m>, EvalError> {
        match (step, self.element(cursor)?) {
            (StepKind::Name, Cursor::Block(b)) => Ok(Cursor::Text(b.name.clone())),
            (StepKind::Name, Cursor::Data(d)) => Ok(Cursor::Text(d.name.clone())),
            (StepKind::Attributes, Cursor::Block(b)) => Ok(self.attribute_values(b)),
            (StepKind::Attributes, Cursor::Data(d)) => Ok(self.data_defaults(d)),
            (StepKind::StereotypeOfAttribute(a), Cursor::Block(b)) => self.data_stereotypes(b, a),
            (StepKind::StereotypeOfAttribute(_), Cursor::Data(d)) => Err(EvalError::Unsupported(format!(
                "data stereotype `{}` has no attributes with stereotypes",
                d.name
            ))),
            _ => unreachable!("element() yields Block or Data"),
        }
    }

    fn finish(&self, cursor: Cursor<'m>) -> Result<CommandValue, EvalError> {
        let text = |v: &AttributeValue| {
            self.registry
                .resolve_value(v)
                .map(CommandValue::Text)
                .map_err(EvalError::Dangling)
        };
        Ok(match cursor {
            Cursor::Text(t) | Cursor::Output(t) => CommandValue::Text(t),
            Cursor::Value(v) => text(&v)?,
            Cursor::Values(vs) => CommandValue::List(vs.iter().map(text).collect::<Result<_, _>>()?),
            Cursor::Data(d) => CommandValue::Text(d.name.clone()),
            Cursor::DataList(ds) => {
                CommandValue::List(ds.iter().map(|d| CommandValue::Text(d.name.clone())).collect())
            }
            Cursor::Block(b) | Cursor::Stereotype(b, _) => CommandValue::Text(b.name.clone()),
        })
    }
}

/// Inputs of `current` passing every filter of `sel`, in declaration order.
pub fn connected_candidates<'r>(
    registry: &'r ContextRegistry<'_>,
    current: &BlockContext,
    sel: &ConnectedSelector,
) -> Result<Vec<&'r BlockContext>, EvalError> {
    let model = registry.model();
    let mut out = Vec::new();
    for qn in &current.connected {
        let ctx = registry
            .get(qn)
            .ok_or_else(|| ContextError::UnknownContext(qn.to_string()))?;
        let block = registry.block(ctx)?;
        if sel.name.as_ref().is_some_and(|n| *n != block.name) {
            continue;
        }
        if let Some(s) = &sel.stereotype_name {
            if !block
                .applied_stereotypes
                .iter()
                .any(|a| model.inherits_from(&a.stereotype, s))
            {
                continue;
            }
        }
        if let Some(expected) = &sel.attribute_value {
            let all = expected.iter().all(|(k, v)| {
                matches!(registry.resolve_attribute(ctx, k), Ok(CommandValue::Text(t)) if t == *v)
            });
            if !all {
                continue;
            }
        }
        if let Some(o) = &sel.output_name {
            let out_var = ctx.snippet.as_ref().and_then(|s| s.output_var.as_deref());
            if out_var != Some(o.as_str()) {
                continue;
            }
        }
        out.push(ctx);
    }
    Ok(out)
}

/// Evaluates `ast` relative to `current`. Performs no mutation.
pub fn eval_command(
    ast: &CommandAst,
    current: &BlockContext,
    registry: &ContextRegistry<'_>,
) -> Result<CommandValue, EvalError> {
    let ev = Evaluator { registry };
    let target = ev.select_source(&ast.source, current)?;
    let block = registry.block(target)?;
    let cursor = match &ast.scope {
        Scope::Block => Cursor::Block(block),
        Scope::Stereotype(name) => {
            let def = block
                .applied(name)
                .and_then(|_| registry.model().stereotype(name))
                .ok_or_else(|| EvalError::NotApplied {
                    block: block.qualified_name.to_string(),
                    stereotype: name.clone(),
                })?;
            Cursor::Stereotype(block, def)
        }
    };
    let mut cursor = ev.accessor(target, cursor, &ast.accessor)?;
    if let Some(i) = ast.accessor_index {
        cursor = ev.index(cursor, i)?;
    }
    for step in &ast.chain {
        cursor = ev.step(cursor, &step.kind)?;
        if let Some(i) = step.index {
            cursor = ev.index(cursor, i)?;
        }
    }
    ev.finish(cursor)
}
