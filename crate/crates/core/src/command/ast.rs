use std::fmt;

use indexmap::IndexMap;

/// A parsed model command: `source.scope.accessor[index]` followed by
/// optional chain steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandAst {
    pub source: Source,
    pub scope: Scope,
    pub accessor: Accessor,
    pub accessor_index: Option<usize>,
    pub chain: Vec<ChainStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    This,
    Connected(ConnectedSelector),
}

/// Filters over the current block's inputs; all present filters must hold.
/// `nr` indexes the filtered list.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConnectedSelector {
    pub name: Option<String>,
    pub nr: usize,
    pub stereotype_name: Option<String>,
    pub attribute_value: Option<IndexMap<String, String>>,
    pub output_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Block,
    Stereotype(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Accessor {
    Name,
    Attributes,
    StereotypeOfAttribute(String),
    Output,
}

impl Accessor {
    pub fn allows_chain(&self) -> bool {
        matches!(self, Accessor::Attributes | Accessor::StereotypeOfAttribute(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    Attributes,
    StereotypeOfAttribute(String),
    /// Terminal.
    Name,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    pub kind: StepKind,
    pub index: Option<usize>,
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl fmt::Display for ConnectedSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(n) = &self.name {
            parts.push(format!("Name={}", quote(n)));
        }
        if self.nr != 0 {
            parts.push(format!("Nr={}", self.nr));
        }
        if let Some(s) = &self.stereotype_name {
            parts.push(format!("StereotypeName={}", quote(s)));
        }
        if let Some(map) = &self.attribute_value {
            let entries: Vec<String> = map
                .iter()
                .map(|(k, v)| format!("{}: {}", quote(k), quote(v)))
                .collect();
            parts.push(format!("AttributeValue={{{}}}", entries.join(", ")));
        }
        if let Some(o) = &self.output_name {
            parts.push(format!("OUTPUT_Name={}", quote(o)));
        }
        if parts.is_empty() {
            f.write_str("CONNECTED")
        } else {
            write!(f, "CONNECTED[{}]", parts.join(", "))
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::This => f.write_str("THIS"),
            Source::Connected(sel) => sel.fmt(f),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Block => f.write_str("BLOCK"),
            Scope::Stereotype(s) => write!(f, "STEREOTYPE[{}]", quote(s)),
        }
    }
}

impl fmt::Display for Accessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Accessor::Name => f.write_str("NAME"),
            Accessor::Attributes => f.write_str("ATTRIBUTES"),
            Accessor::StereotypeOfAttribute(a) => write!(f, "STEREOTYPEofATTRIBUTE[{}]", quote(a)),
            Accessor::Output => f.write_str("OUTPUT"),
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Attributes => f.write_str("ATTRIBUTES"),
            StepKind::StereotypeOfAttribute(a) => write!(f, "STEREOTYPEofATTRIBUTE[{}]", quote(a)),
            StepKind::Name => f.write_str("NAME"),
        }
    }
}

fn write_index(f: &mut fmt::Formatter<'_>, index: Option<usize>) -> fmt::Result {
    match index {
        Some(i) => write!(f, "[{i}]"),
        None => Ok(()),
    }
}

/// Canonical text; parsing it yields an equal AST.
impl fmt::Display for CommandAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.source, self.scope, self.accessor)?;
        write_index(f, self.accessor_index)?;
        for step in &self.chain {
            write!(f, ".{}", step.kind)?;
            write_index(f, step.index)?;
        }
        Ok(())
    }
}
