//! Intermediate model: one [`BlockContext`] per distinct block reachable from
//! a state machine, ordered so that inputs precede the blocks consuming them.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::command::CommandValue;
use crate::model::{AttributeValue, Block, Model, QualifiedName, StateMachine};
use crate::template::Snippet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContextError {
    #[error("state `{state}` links unknown block `{block}`")]
    UnresolvedState { state: String, block: String },
    #[error("part-of cycle through `{0}`")]
    PartsCycle(String),
    #[error("block `{block}` has no attribute `{attribute}`")]
    MissingAttribute { block: String, attribute: String },
    #[error("attribute `{attribute}` of block `{block}` references unknown block `{target}`")]
    DanglingReference {
        block: String,
        attribute: String,
        target: String,
    },
    #[error("no context for block `{0}`")]
    UnknownContext(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockContext {
    pub block_ref: QualifiedName,
    pub comments: Vec<String>,
    /// Input contexts, in part declaration order.
    pub connected: Vec<QualifiedName>,
    /// Stereotype property values (assigned or defaulted) followed by the
    /// block's own attributes; a name already present is not overwritten.
    pub attributes: IndexMap<String, AttributeValue>,
    pub execution_order: usize,
    pub snippet: Option<Snippet>,
}

/// Insertion-ordered set of contexts; insertion order equals execution order.
#[derive(Debug, Clone)]
pub struct ContextRegistry<'m> {
    model: &'m Model,
    contexts: IndexMap<QualifiedName, BlockContext>,
}

impl<'m> ContextRegistry<'m> {
    pub fn empty(model: &'m Model) -> Self {
        ContextRegistry {
            model,
            contexts: IndexMap::new(),
        }
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn get(&self, name: &QualifiedName) -> Option<&BlockContext> {
        self.contexts.get(name)
    }

    /// Contexts in execution order.
    pub fn iter(&self) -> impl Iterator<Item = &BlockContext> {
        self.contexts.values()
    }

    pub fn block(&self, context: &BlockContext) -> Result<&'m Block, ContextError> {
        self.model
            .block(&context.block_ref)
            .ok_or_else(|| ContextError::UnknownContext(context.block_ref.to_string()))
    }

    pub fn attach_snippet(&mut self, name: &QualifiedName, snippet: Snippet) -> Result<(), ContextError> {
        let ctx = self
            .contexts
            .get_mut(name)
            .ok_or_else(|| ContextError::UnknownContext(name.to_string()))?;
        ctx.snippet = Some(snippet);
        Ok(())
    }

    /// Visits the machine's states in ascending order; each state's block is
    /// preceded by its transitive inputs (depth-first post-order).
    pub fn build(model: &'m Model, machine: &StateMachine) -> Result<Self, ContextError> {
        let mut registry = ContextRegistry::empty(model);
        let mut on_path = HashSet::new();
        let mut states: Vec<_> = machine.states.iter().collect();
        states.sort_by_key(|s| s.order);
        for state in states {
            let block = model
                .block(&state.block)
                .ok_or_else(|| ContextError::UnresolvedState {
                    state: state.name.clone(),
                    block: state.block.to_string(),
                })?;
            registry.visit(block, &mut on_path)?;
        }
        Ok(registry)
    }

    fn visit(&mut self, block: &'m Block, on_path: &mut HashSet<QualifiedName>) -> Result<(), ContextError> {
        if self.contexts.contains_key(&block.qualified_name) {
            return Ok(());
        }
        if !on_path.insert(block.qualified_name.clone()) {
            return Err(ContextError::PartsCycle(block.qualified_name.to_string()));
        }
        for input in &block.parts {
            let input_block = self
                .model
                .block(input)
                .ok_or_else(|| ContextError::UnknownContext(input.to_string()))?;
            self.visit(input_block, on_path)?;
        }
        on_path.remove(&block.qualified_name);

        let context = BlockContext {
            block_ref: block.qualified_name.clone(),
            comments: block.comments.clone(),
            connected: block.parts.clone(),
            attributes: context_attributes(self.model, block),
            execution_order: self.contexts.len(),
            snippet: None,
        };
        self.contexts.insert(block.qualified_name.clone(), context);
        Ok(())
    }

    /// Text value of attribute `name` on `context`. References materialize
    /// to the referenced block's name only here.
    pub fn resolve_attribute(&self, context: &BlockContext, name: &str) -> Result<CommandValue, ContextError> {
        let value = context
            .attributes
            .get(name)
            .ok_or_else(|| ContextError::MissingAttribute {
                block: context.block_ref.to_string(),
                attribute: name.to_string(),
            })?;
        self.resolve_value(value)
            .map(CommandValue::Text)
            .map_err(|target| ContextError::DanglingReference {
                block: context.block_ref.to_string(),
                attribute: name.to_string(),
                target,
            })
    }

    /// Text of a value; the error carries the unresolved target.
    pub fn resolve_value(&self, value: &AttributeValue) -> Result<String, String> {
        match value {
            AttributeValue::Primitive(p) => Ok(p.render()),
            AttributeValue::Reference { target } => self
                .model
                .block(target)
                .map(|b| b.name.clone())
                .ok_or_else(|| target.to_string()),
        }
    }
}

fn context_attributes(model: &Model, block: &Block) -> IndexMap<String, AttributeValue> {
    let mut out = IndexMap::new();
    for applied in &block.applied_stereotypes {
        if let Ok(props) = model.effective_properties(block, &applied.stereotype) {
            for (name, prop) in props {
                if let Some(value) = prop.value() {
                    out.entry(name.to_string()).or_insert(value);
                }
            }
        }
    }
    for attr in &block.attributes {
        out.entry(attr.name.clone()).or_insert_with(|| attr.value.clone());
    }
    out
}
