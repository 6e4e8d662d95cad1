//! SysML-lite model: stereotype definitions with inheritance, blocks with
//! applied stereotypes and attributes, part-of compositions, state machines.
//!
//! The on-disk form is a single JSON document with the top-level keys
//! `stereotypes`, `blocks` and `stateMachines`. [`Model::load`] validates the
//! structure and links every name; the resulting [`Model`] is immutable.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::shape::{self, Expect};

/// Name of the stereotype every ml-task stereotype must inherit from.
pub const ROOT_STEREOTYPE: &str = "ML";

/// Prefix marking a block attribute as a keyword-argument extra.
pub const KWARGS_PREFIX: &str = "**";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid qualified name `{0}`")]
    InvalidQualifiedName(String),
    #[error("unresolved reference `{name}` (referenced from {from})")]
    Unresolved { name: String, from: String },
    #[error("stereotype inheritance cycle: {}", .0.join(" -> "))]
    InheritanceCycle(Vec<String>),
    #[error("part-of cycle: {}", .0.join(" -> "))]
    PartsCycle(Vec<String>),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("invalid {element}: {reason}")]
    Invalid { element: String, reason: String },
    #[error("stereotype `{stereotype}` is not applied to block `{block}`")]
    NotApplied { block: String, stereotype: String },
}

fn invalid(element: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        element: element.into(),
        reason: reason.into(),
    }
}

/// Globally unique `::`-separated identifier of a named model element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QualifiedName(Vec<String>);

impl QualifiedName {
    pub fn new<I, S>(segments: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        if segments.is_empty() || segments.iter().any(|s| s.is_empty() || s.contains("::")) {
            return Err(ModelError::InvalidQualifiedName(segments.join("::")));
        }
        Ok(QualifiedName(segments))
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    /// Last segment, the simple name.
    pub fn simple_name(&self) -> &str {
        self.0.last().map(String::as_str).unwrap_or_default()
    }

    pub fn child(&self, segment: &str) -> Result<Self, ModelError> {
        let mut segments = self.0.clone();
        segments.push(segment.to_string());
        QualifiedName::new(segments)
    }
}

impl FromStr for QualifiedName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QualifiedName::new(s.split("::")).map_err(|_| ModelError::InvalidQualifiedName(s.into()))
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("::"))
    }
}

impl Serialize for QualifiedName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QualifiedName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// A primitive literal as stored in the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Primitive {
    Bool(bool),
    Number(serde_json::Number),
    String(String),
}

impl Primitive {
    pub fn value_type(&self) -> ValueType {
        match self {
            Primitive::Bool(_) => ValueType::Boolean,
            Primitive::Number(_) => ValueType::Number,
            Primitive::String(_) => ValueType::String,
        }
    }

    /// Text form used for template substitution: numbers in shortest
    /// round-trip form, booleans as `True`/`False`, strings verbatim.
    pub fn render(&self) -> String {
        match self {
            Primitive::Bool(true) => "True".to_string(),
            Primitive::Bool(false) => "False".to_string(),
            Primitive::Number(n) => n.to_string(),
            Primitive::String(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    String,
    Number,
    Boolean,
    Reference,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::String => "string",
            ValueType::Number => "number",
            ValueType::Boolean => "boolean",
            ValueType::Reference => "reference",
        })
    }
}

/// Value of an attribute or stereotype property. References stay symbolic
/// until a value is demanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Reference {
        #[serde(rename = "ref")]
        target: QualifiedName,
    },
    Primitive(Primitive),
}

impl AttributeValue {
    pub fn value_type(&self) -> ValueType {
        match self {
            AttributeValue::Reference { .. } => ValueType::Reference,
            AttributeValue::Primitive(p) => p.value_type(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StereotypeKind {
    MlTask,
    Data,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyDef {
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: ValueType,
    #[serde(default)]
    pub mandatory: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Primitive>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StereotypeDef {
    pub name: String,
    pub kind: StereotypeKind,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub properties: Vec<PropertyDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppliedStereotype {
    pub stereotype: String,
    #[serde(default)]
    pub values: IndexMap<String, AttributeValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAttribute", into = "RawAttribute")]
pub struct Attribute {
    pub name: String,
    pub value: AttributeValue,
    /// Names of data stereotypes applied to this attribute.
    pub stereotypes: Vec<String>,
}

impl Attribute {
    /// Name without the `**` marker if this is a keyword-argument extra.
    pub fn kwarg_name(&self) -> Option<&str> {
        self.name.strip_prefix(KWARGS_PREFIX)
    }

    pub fn is_kwarg(&self) -> bool {
        self.kwarg_name().is_some()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttribute {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<Primitive>,
    #[serde(default, rename = "ref", skip_serializing_if = "Option::is_none")]
    reference: Option<QualifiedName>,
    #[serde(default)]
    stereotypes: Vec<String>,
}

impl TryFrom<RawAttribute> for Attribute {
    type Error = String;

    fn try_from(raw: RawAttribute) -> Result<Self, Self::Error> {
        let value = match (raw.value, raw.reference) {
            (Some(p), None) => AttributeValue::Primitive(p),
            (None, Some(target)) => AttributeValue::Reference { target },
            _ => {
                return Err(format!(
                    "attribute `{}` must have exactly one of `value` or `ref`",
                    raw.name
                ))
            }
        };
        Ok(Attribute {
            name: raw.name,
            value,
            stereotypes: raw.stereotypes,
        })
    }
}

impl From<Attribute> for RawAttribute {
    fn from(attr: Attribute) -> Self {
        let (value, reference) = match attr.value {
            AttributeValue::Primitive(p) => (Some(p), None),
            AttributeValue::Reference { target } => (None, Some(target)),
        };
        RawAttribute {
            name: attr.name,
            value,
            reference,
            stereotypes: attr.stereotypes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Block {
    pub qualified_name: QualifiedName,
    pub name: String,
    #[serde(default)]
    pub applied_stereotypes: Vec<AppliedStereotype>,
    #[serde(default)]
    pub attributes: Vec<Attribute>,
    /// Composed input blocks, in declaration order.
    #[serde(default)]
    pub parts: Vec<QualifiedName>,
    #[serde(default)]
    pub comments: Vec<String>,
}

impl Block {
    pub fn applied(&self, stereotype: &str) -> Option<&AppliedStereotype> {
        self.applied_stereotypes
            .iter()
            .find(|a| a.stereotype == stereotype)
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Keyword-argument extras in declaration order, `**` stripped.
    pub fn kwargs(&self) -> impl Iterator<Item = (&str, &AttributeValue)> {
        self.attributes
            .iter()
            .filter_map(|a| a.kwarg_name().map(|n| (n, &a.value)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub name: String,
    pub order: i64,
    pub block: QualifiedName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateMachine {
    pub name: String,
    /// Sorted by ascending `order` after load.
    #[serde(default)]
    pub states: Vec<State>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    stereotypes: Vec<StereotypeDef>,
    #[serde(default)]
    blocks: Vec<Block>,
    #[serde(default)]
    state_machines: Vec<StateMachine>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ModelView<'a> {
    stereotypes: Vec<&'a StereotypeDef>,
    blocks: Vec<&'a Block>,
    state_machines: &'a [StateMachine],
}

/// Resolved property definition together with the value a block assigns.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveProperty<'m> {
    pub def: &'m PropertyDef,
    /// Stereotype that contributed the winning definition.
    pub declared_by: &'m str,
    pub assigned: Option<&'m AttributeValue>,
}

impl EffectiveProperty<'_> {
    /// Assigned value, falling back to the definition's default.
    pub fn value(&self) -> Option<AttributeValue> {
        self.assigned.cloned().or_else(|| {
            self.def
                .default
                .as_ref()
                .map(|d| AttributeValue::Primitive(d.clone()))
        })
    }
}

const MODEL_SHAPE: &[(&str, Expect)] = &[
    ("", Expect::Object),
    ("stereotypes.*", Expect::Object),
    ("stereotypes.*.properties.*", Expect::Object),
    ("blocks.*", Expect::Object),
    ("blocks.*.appliedStereotypes.*", Expect::Object),
    ("blocks.*.appliedStereotypes.*.values", Expect::Object),
    ("blocks.*.appliedStereotypes.*.values.*", Expect::NotArray),
    ("blocks.*.attributes.*", Expect::Object),
    ("stateMachines.*", Expect::Object),
    ("stateMachines.*.states.*", Expect::Object),
];

/// A fully linked, immutable model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    stereotypes: IndexMap<String, StereotypeDef>,
    blocks: IndexMap<QualifiedName, Block>,
    machines: Vec<StateMachine>,
}

impl Model {
    /// Parse and link a model document.
    pub fn load(bytes: &[u8]) -> Result<Model, ModelError> {
        let parse_error = |e: serde_json::Error| ModelError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        };
        let doc: serde_json::Value = serde_json::from_slice(bytes).map_err(parse_error)?;
        shape::check(&doc, MODEL_SHAPE).map_err(|(path, reason)| invalid(path, reason))?;
        let raw: RawModel = serde_json::from_slice(bytes).map_err(parse_error)?;
        Model::from_parts(raw.stereotypes, raw.blocks, raw.state_machines)
    }

    pub fn from_parts(
        stereotypes: Vec<StereotypeDef>,
        blocks: Vec<Block>,
        machines: Vec<StateMachine>,
    ) -> Result<Model, ModelError> {
        let mut model = Model {
            stereotypes: IndexMap::new(),
            blocks: IndexMap::new(),
            machines: Vec::new(),
        };
        for s in stereotypes {
            if model.stereotypes.contains_key(&s.name) {
                return Err(ModelError::Duplicate(s.name));
            }
            model.stereotypes.insert(s.name.clone(), s);
        }
        model.validate_stereotypes()?;

        let mut names: HashSet<QualifiedName> = HashSet::new();
        for b in blocks {
            if !names.insert(b.qualified_name.clone()) {
                return Err(ModelError::Duplicate(b.qualified_name.to_string()));
            }
            for a in &b.attributes {
                let qn = b
                    .qualified_name
                    .child(&a.name)
                    .map_err(|_| invalid(format!("attribute of `{}`", b.qualified_name), format!("bad attribute name `{}`", a.name)))?;
                if !names.insert(qn.clone()) {
                    return Err(ModelError::Duplicate(qn.to_string()));
                }
            }
            model.blocks.insert(b.qualified_name.clone(), b);
        }
        for b in model.blocks.values() {
            model.validate_block(b)?;
        }
        model.check_parts_acyclic()?;

        let mut machine_names = HashSet::new();
        for mut m in machines {
            if !machine_names.insert(m.name.clone()) {
                return Err(ModelError::Duplicate(m.name));
            }
            let mut orders = HashSet::new();
            for s in &m.states {
                if s.order < 0 {
                    return Err(invalid(
                        format!("state `{}` of machine `{}`", s.name, m.name),
                        "order must be non-negative",
                    ));
                }
                if !orders.insert(s.order) {
                    return Err(invalid(
                        format!("machine `{}`", m.name),
                        format!("state order {} is used twice", s.order),
                    ));
                }
                if !model.blocks.contains_key(&s.block) {
                    return Err(ModelError::Unresolved {
                        name: s.block.to_string(),
                        from: format!("state `{}` of machine `{}`", s.name, m.name),
                    });
                }
            }
            m.states.sort_by_key(|s| s.order);
            model.machines.push(m);
        }
        Ok(model)
    }

    /// Serialize back to the interchange format.
    pub fn to_json(&self) -> String {
        let view = ModelView {
            stereotypes: self.stereotypes.values().collect(),
            blocks: self.blocks.values().collect(),
            state_machines: &self.machines,
        };
        serde_json::to_string_pretty(&view).expect("model serialization is infallible")
    }

    pub fn stereotypes(&self) -> impl Iterator<Item = &StereotypeDef> {
        self.stereotypes.values()
    }

    pub fn stereotype(&self, name: &str) -> Option<&StereotypeDef> {
        self.stereotypes.get(name)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    pub fn block(&self, name: &QualifiedName) -> Option<&Block> {
        self.blocks.get(name)
    }

    pub fn machines(&self) -> &[StateMachine] {
        &self.machines
    }

    pub fn machine(&self, name: &str) -> Option<&StateMachine> {
        self.machines.iter().find(|m| m.name == name)
    }

    /// Inheritance linearization of `name`: depth-first over `parents` in
    /// declaration order; a stereotype reachable along several paths keeps
    /// only its last position, so every stereotype precedes its ancestors.
    pub fn linearize(&self, name: &str) -> Vec<&StereotypeDef> {
        let mut preorder = Vec::new();
        self.preorder(name, &mut preorder);
        let mut last: HashMap<&str, usize> = HashMap::new();
        for (i, s) in preorder.iter().enumerate() {
            last.insert(s.name.as_str(), i);
        }
        preorder
            .iter()
            .enumerate()
            .filter(|(i, s)| last[s.name.as_str()] == *i)
            .map(|(_, s)| *s)
            .collect()
    }

    fn preorder<'m>(&'m self, name: &str, out: &mut Vec<&'m StereotypeDef>) {
        if let Some(s) = self.stereotypes.get(name) {
            out.push(s);
            for p in &s.parents {
                self.preorder(p, out);
            }
        }
    }

    /// True if `name` is `ancestor` or inherits from it.
    pub fn inherits_from(&self, name: &str, ancestor: &str) -> bool {
        self.linearize(name).iter().any(|s| s.name == ancestor)
    }

    /// Effective property definitions of a stereotype. Nearer definitions
    /// shadow inherited ones by name; inherited properties are listed first.
    pub fn effective_definitions(&self, stereotype: &str) -> IndexMap<&str, (&PropertyDef, &str)> {
        let chain = self.linearize(stereotype);
        let mut winners: HashMap<&str, (&PropertyDef, &str)> = HashMap::new();
        for s in &chain {
            for p in &s.properties {
                winners.entry(p.name.as_str()).or_insert((p, s.name.as_str()));
            }
        }
        let mut out = IndexMap::new();
        for s in chain.iter().rev() {
            for p in &s.properties {
                let (def, by) = winners[p.name.as_str()];
                if by == s.name && !out.contains_key(p.name.as_str()) {
                    out.insert(p.name.as_str(), (def, by));
                }
            }
        }
        out
    }

    /// Effective properties of `stereotype` as applied to `block`.
    pub fn effective_properties<'m>(
        &'m self,
        block: &'m Block,
        stereotype: &str,
    ) -> Result<IndexMap<&'m str, EffectiveProperty<'m>>, ModelError> {
        let applied = block
            .applied(stereotype)
            .ok_or_else(|| ModelError::NotApplied {
                block: block.qualified_name.to_string(),
                stereotype: stereotype.to_string(),
            })?;
        Ok(self
            .effective_definitions(stereotype)
            .into_iter()
            .map(|(name, (def, declared_by))| {
                (
                    name,
                    EffectiveProperty {
                        def,
                        declared_by,
                        assigned: applied.values.get(name),
                    },
                )
            })
            .collect())
    }

    /// Composed input blocks of `block`, in declaration order.
    pub fn connected_inputs<'m>(&'m self, block: &Block) -> Vec<&'m Block> {
        block
            .parts
            .iter()
            .filter_map(|qn| self.blocks.get(qn))
            .collect()
    }

    /// Mandatory properties of applied ml-task stereotypes that have no value.
    /// Returns `(stereotype, property)` pairs.
    pub fn missing_mandatory<'m>(&'m self, block: &'m Block) -> Vec<(&'m str, &'m str)> {
        let mut missing = Vec::new();
        for applied in &block.applied_stereotypes {
            let Some(def) = self.stereotypes.get(&applied.stereotype) else {
                continue;
            };
            if def.kind != StereotypeKind::MlTask {
                continue;
            }
            for (name, (prop, _)) in self.effective_definitions(&def.name) {
                if prop.mandatory && !applied.values.contains_key(name) {
                    missing.push((def.name.as_str(), name));
                }
            }
        }
        missing
    }

    fn validate_stereotypes(&self) -> Result<(), ModelError> {
        for s in self.stereotypes.values() {
            for p in &s.parents {
                if !self.stereotypes.contains_key(p) {
                    return Err(ModelError::Unresolved {
                        name: p.clone(),
                        from: format!("parents of stereotype `{}`", s.name),
                    });
                }
            }
            let mut seen = HashSet::new();
            for p in &s.properties {
                let element = format!("property `{}` of stereotype `{}`", p.name, s.name);
                if !seen.insert(p.name.as_str()) {
                    return Err(ModelError::Duplicate(format!("{}::{}", s.name, p.name)));
                }
                if p.name.is_empty() {
                    return Err(invalid(element, "empty name"));
                }
                if p.name.starts_with(KWARGS_PREFIX) {
                    return Err(invalid(element, "`**` extras are only allowed as block attributes"));
                }
                if p.mandatory && p.default.is_some() {
                    return Err(invalid(element, "mandatory property cannot have a default"));
                }
                if let Some(d) = &p.default {
                    if d.value_type() != p.value_type {
                        return Err(invalid(
                            element,
                            format!("default is a {} but the property is a {}", d.value_type(), p.value_type),
                        ));
                    }
                }
            }
        }

        // cycle detection: 0 = unvisited, 1 = on stack, 2 = done
        let mut state: HashMap<&str, u8> = HashMap::new();
        let mut stack: Vec<&str> = Vec::new();
        for name in self.stereotypes.keys() {
            self.visit_stereotype(name, &mut state, &mut stack)?;
        }

        for s in self.stereotypes.values() {
            if s.kind == StereotypeKind::MlTask
                && s.name != ROOT_STEREOTYPE
                && !self.inherits_from(&s.name, ROOT_STEREOTYPE)
            {
                return Err(invalid(
                    format!("stereotype `{}`", s.name),
                    format!("ml-task stereotypes must inherit from `{ROOT_STEREOTYPE}`"),
                ));
            }
        }
        Ok(())
    }

    fn visit_stereotype<'m>(
        &'m self,
        name: &'m str,
        state: &mut HashMap<&'m str, u8>,
        stack: &mut Vec<&'m str>,
    ) -> Result<(), ModelError> {
        match state.get(name) {
            Some(2) => return Ok(()),
            Some(1) => {
                let start = stack.iter().position(|n| *n == name).unwrap_or(0);
                let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(name.to_string());
                return Err(ModelError::InheritanceCycle(cycle));
            }
            _ => {}
        }
        state.insert(name, 1);
        stack.push(name);
        for p in &self.stereotypes[name].parents {
            self.visit_stereotype(p, state, stack)?;
        }
        stack.pop();
        state.insert(name, 2);
        Ok(())
    }

    fn check_value(&self, value: &AttributeValue, from: impl Fn() -> String) -> Result<(), ModelError> {
        if let AttributeValue::Reference { target } = value {
            if !self.blocks.contains_key(target) {
                return Err(ModelError::Unresolved {
                    name: target.to_string(),
                    from: from(),
                });
            }
        }
        Ok(())
    }

    fn validate_block(&self, b: &Block) -> Result<(), ModelError> {
        let qn = &b.qualified_name;
        let mut applied_seen = HashSet::new();
        for applied in &b.applied_stereotypes {
            if !self.stereotypes.contains_key(&applied.stereotype) {
                return Err(ModelError::Unresolved {
                    name: applied.stereotype.clone(),
                    from: format!("block `{qn}`"),
                });
            }
            if !applied_seen.insert(applied.stereotype.as_str()) {
                return Err(invalid(
                    format!("block `{qn}`"),
                    format!("stereotype `{}` applied twice", applied.stereotype),
                ));
            }
            let defs = self.effective_definitions(&applied.stereotype);
            for (prop, value) in &applied.values {
                let element = format!("value `{prop}` of stereotype `{}` on block `{qn}`", applied.stereotype);
                let Some((def, _)) = defs.get(prop.as_str()) else {
                    return Err(invalid(element, "no such property on the stereotype"));
                };
                if value.value_type() != def.value_type {
                    return Err(invalid(
                        element,
                        format!("expected a {}, found a {}", def.value_type, value.value_type()),
                    ));
                }
                self.check_value(value, || element.clone())?;
            }
        }
        for a in &b.attributes {
            self.check_value(&a.value, || format!("attribute `{}` of block `{qn}`", a.name))?;
            for s in &a.stereotypes {
                match self.stereotypes.get(s) {
                    None => {
                        return Err(ModelError::Unresolved {
                            name: s.clone(),
                            from: format!("attribute `{}` of block `{qn}`", a.name),
                        })
                    }
                    Some(def) if def.kind != StereotypeKind::Data => {
                        return Err(invalid(
                            format!("attribute `{}` of block `{qn}`", a.name),
                            format!("`{s}` is not a data stereotype"),
                        ))
                    }
                    Some(_) => {}
                }
            }
        }
        for p in &b.parts {
            if !self.blocks.contains_key(p) {
                return Err(ModelError::Unresolved {
                    name: p.to_string(),
                    from: format!("parts of block `{qn}`"),
                });
            }
        }
        Ok(())
    }

    fn check_parts_acyclic(&self) -> Result<(), ModelError> {
        let mut state: HashMap<&QualifiedName, u8> = HashMap::new();
        let mut stack = Vec::new();
        for qn in self.blocks.keys() {
            self.visit_parts(qn, &mut state, &mut stack)?;
        }
        Ok(())
    }

    fn visit_parts<'m>(
        &'m self,
        qn: &'m QualifiedName,
        state: &mut HashMap<&'m QualifiedName, u8>,
        stack: &mut Vec<&'m QualifiedName>,
    ) -> Result<(), ModelError> {
        match state.get(qn) {
            Some(2) => return Ok(()),
            Some(1) => {
                let start = stack.iter().position(|n| *n == qn).unwrap_or(0);
                let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(qn.to_string());
                return Err(ModelError::PartsCycle(cycle));
            }
            _ => {}
        }
        state.insert(qn, 1);
        stack.push(qn);
        for p in &self.blocks[qn].parts {
            self.visit_parts(p, state, stack)?;
        }
        stack.pop();
        state.insert(qn, 2);
        Ok(())
    }
}
