//! Placeholder templates and the code snippets rendered from them.
//!
//! Placeholder grammar:
//!
//! * `${name}` – mandatory variable.
//! * `${(name, default)}` – optional variable. The default is either bare
//!   text up to `)}` (trimmed) or a double-quoted string whose quotes are
//!   stripped (`\"` and `\\` escapes).
//! * `**kwargs` – anchor where `**`-prefixed block attributes are rendered
//!   as `name=value` pairs. At most one per template.
//!
//! Templates live in `<root>/<name>.tmpl`; `name` may contain `/`.

use std::path::{Component, Path, PathBuf};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::model::QualifiedName;
use crate::syntax;

pub const TEMPLATE_EXTENSION: &str = "tmpl";
pub const KWARGS_ANCHOR: &str = "**kwargs";
pub const OUTPUT_DIRECTIVE: &str = "#@output";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("template `{name}` not found at {}", .path.display())]
    NotFound { name: String, path: PathBuf },
    #[error("cannot read template `{name}`: {message}")]
    Io { name: String, message: String },
    #[error("invalid template name `{0}`")]
    InvalidName(String),
    #[error("template `{0}` contains more than one `**kwargs` anchor")]
    MultipleAnchors(String),
    #[error("malformed placeholder in template `{template}` at offset {offset}: {reason}")]
    Malformed {
        template: String,
        offset: usize,
        reason: String,
    },
    #[error("template `{template}` requires variable `{variable}`, but block `{block}` does not bind it")]
    MissingVariable {
        template: String,
        variable: String,
        block: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Var { name: String, raw: String },
    VarDefault { name: String, default: String, raw: String },
    KwargsAnchor,
}

impl Segment {
    fn source(&self) -> &str {
        match self {
            Segment::Literal(s) => s,
            Segment::Var { raw, .. } | Segment::VarDefault { raw, .. } => raw,
            Segment::KwargsAnchor => KWARGS_ANCHOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    pub segments: Vec<Segment>,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Parser<'a> {
    template: &'a str,
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn malformed(&self, offset: usize, reason: &str) -> TemplateError {
        TemplateError::Malformed {
            template: self.template.to_string(),
            offset,
            reason: reason.to_string(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start_matches([' ', '\t']).len();
    }

    /// Parses the placeholder starting at `self.pos` (which points at `${`).
    fn placeholder(&mut self) -> Result<Segment, TemplateError> {
        let start = self.pos;
        self.pos += 2;
        if self.rest().starts_with('(') {
            self.pos += 1;
            let rest = self.rest();
            let comma = rest
                .find([',', '}', '\n'])
                .filter(|&i| rest.as_bytes()[i] == b',')
                .ok_or_else(|| self.malformed(start, "expected `,` between name and default"))?;
            let name = rest[..comma].trim().to_string();
            check_var_name(&name).map_err(|r| self.malformed(start, r))?;
            self.pos += comma + 1;
            self.skip_ws();
            let default = if self.rest().starts_with('"') {
                self.quoted(start)?
            } else {
                let rest = self.rest();
                let end = rest
                    .find(")}")
                    .filter(|&i| !rest[..i].contains('\n'))
                    .ok_or_else(|| self.malformed(start, "unterminated placeholder, expected `)}`"))?;
                self.pos += end;
                rest[..end].trim_end().to_string()
            };
            self.skip_ws();
            if !self.rest().starts_with(")}") {
                return Err(self.malformed(start, "expected `)}` after default value"));
            }
            self.pos += 2;
            Ok(Segment::VarDefault {
                name,
                default,
                raw: self.text[start..self.pos].to_string(),
            })
        } else {
            let rest = self.rest();
            let end = rest
                .find(['}', '\n'])
                .filter(|&i| rest.as_bytes()[i] == b'}')
                .ok_or_else(|| self.malformed(start, "unterminated placeholder, expected `}`"))?;
            let name = rest[..end].trim().to_string();
            check_var_name(&name).map_err(|r| self.malformed(start, r))?;
            self.pos += end + 1;
            Ok(Segment::Var {
                name,
                raw: self.text[start..self.pos].to_string(),
            })
        }
    }

    fn quoted(&mut self, start: usize) -> Result<String, TemplateError> {
        let mut out = String::new();
        let mut chars = self.rest().char_indices().skip(1);
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    Some((_, e)) => {
                        out.push('\\');
                        out.push(e);
                    }
                    None => break,
                },
                '\n' => break,
                c => out.push(c),
            }
        }
        Err(self.malformed(start, "unterminated quoted default"))
    }
}

fn check_var_name(name: &str) -> Result<(), &'static str> {
    if name.is_empty() {
        return Err("empty variable name");
    }
    if name.contains(['$', '{', '}', '(', ')', ',']) {
        return Err("variable name contains a reserved character");
    }
    Ok(())
}

impl Template {
    pub fn parse(name: &str, text: &str) -> Result<Template, TemplateError> {
        let mut p = Parser {
            template: name,
            text,
            pos: 0,
        };
        let mut segments = Vec::new();
        let mut literal_start = 0;
        let mut anchors = 0;
        while p.pos < text.len() {
            let rest = p.rest();
            if rest.starts_with("${") {
                if literal_start < p.pos {
                    segments.push(Segment::Literal(text[literal_start..p.pos].to_string()));
                }
                segments.push(p.placeholder()?);
                literal_start = p.pos;
            } else if rest.starts_with(KWARGS_ANCHOR)
                && !rest[KWARGS_ANCHOR.len()..].starts_with(is_ident_char)
            {
                anchors += 1;
                if anchors > 1 {
                    return Err(TemplateError::MultipleAnchors(name.to_string()));
                }
                if literal_start < p.pos {
                    segments.push(Segment::Literal(text[literal_start..p.pos].to_string()));
                }
                segments.push(Segment::KwargsAnchor);
                p.pos += KWARGS_ANCHOR.len();
                literal_start = p.pos;
            } else {
                p.pos += rest.chars().next().map_or(1, char::len_utf8);
            }
        }
        if literal_start < text.len() {
            segments.push(Segment::Literal(text[literal_start..].to_string()));
        }
        Ok(Template {
            name: name.to_string(),
            segments,
        })
    }

    /// Path of template `name` under `root`. Rejects absolute paths and `..`.
    pub fn path(root: &Path, name: &str) -> Result<PathBuf, TemplateError> {
        let rel = Path::new(name);
        if name.is_empty()
            || rel
                .components()
                .any(|c| !matches!(c, Component::Normal(_)))
        {
            return Err(TemplateError::InvalidName(name.to_string()));
        }
        Ok(root.join(format!("{name}.{TEMPLATE_EXTENSION}")))
    }

    pub fn load(root: &Path, name: &str) -> Result<Template, TemplateError> {
        let path = Template::path(root, name)?;
        let text = std::fs::read_to_string(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                TemplateError::NotFound {
                    name: name.to_string(),
                    path: path.clone(),
                }
            } else {
                TemplateError::Io {
                    name: name.to_string(),
                    message: e.to_string(),
                }
            }
        })?;
        Template::parse(name, &text)
    }

    /// Original template text.
    pub fn source(&self) -> String {
        self.segments.iter().map(Segment::source).collect()
    }

    pub fn has_kwargs_anchor(&self) -> bool {
        self.segments.iter().any(|s| matches!(s, Segment::KwargsAnchor))
    }

    /// Distinct variables with whether they are mandatory, in first-use order.
    /// A variable used both with and without a default is mandatory.
    pub fn variables(&self) -> IndexMap<&str, bool> {
        let mut vars: IndexMap<&str, bool> = IndexMap::new();
        for s in &self.segments {
            match s {
                Segment::Var { name, .. } => {
                    vars.insert(name, true);
                }
                Segment::VarDefault { name, .. } => {
                    vars.entry(name).or_insert(false);
                }
                _ => {}
            }
        }
        vars
    }

    pub fn render(
        &self,
        bindings: &IndexMap<String, String>,
        kwargs: &[(String, String)],
        block: &QualifiedName,
    ) -> Result<String, TemplateError> {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Literal(text) => out.push_str(text),
                Segment::Var { name, .. } => {
                    let value = bindings.get(name).ok_or_else(|| TemplateError::MissingVariable {
                        template: self.name.clone(),
                        variable: name.clone(),
                        block: block.to_string(),
                    })?;
                    out.push_str(value);
                }
                Segment::VarDefault { name, default, .. } => {
                    out.push_str(bindings.get(name).unwrap_or(default));
                }
                Segment::KwargsAnchor => {
                    let pairs: Vec<String> =
                        kwargs.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    out.push_str(&pairs.join(", "));
                }
            }
        }
        Ok(out)
    }
}

/// Rendered code fragment of one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Snippet {
    pub body: String,
    pub imports: Vec<String>,
    pub output_var: Option<String>,
    pub source_block: QualifiedName,
}

impl Snippet {
    /// Runs output detection then import extraction over rendered text.
    pub fn from_rendered(rendered: &str, source_block: QualifiedName) -> Snippet {
        let (output_var, without_directive) = extract_output(rendered);
        let (imports, body) = extract_imports(&without_directive);
        Snippet {
            body,
            imports,
            output_var,
            source_block,
        }
    }
}

fn is_import_line(line: &str) -> bool {
    if line.starts_with(char::is_whitespace) {
        return false;
    }
    let mut words = line.split_whitespace();
    match words.next() {
        Some("import") => words.next().is_some(),
        Some("from") => words.next().is_some() && words.next() == Some("import"),
        Some(w) if w.starts_with("import") => false,
        _ => false,
    }
}

/// Removes top-level (column 0) `import ...` / `from ... import ...`
/// statements, including their bracketed or backslash continuation lines.
pub fn extract_imports(rendered: &str) -> (Vec<String>, String) {
    let scan = syntax::scan(rendered);
    let lines: Vec<&str> = rendered.split_inclusive('\n').collect();
    let mut imports = Vec::new();
    let mut body = String::new();
    let mut i = 0;
    while i < lines.len() {
        if scan.statement_starts.get(i).copied().unwrap_or(true) && is_import_line(lines[i]) {
            let mut stmt = String::from(lines[i]);
            let mut j = i + 1;
            while j < lines.len() && !scan.statement_starts.get(j).copied().unwrap_or(true) {
                stmt.push_str(lines[j]);
                j += 1;
            }
            imports.push(stmt.trim_end().to_string());
            i = j;
        } else {
            body.push_str(lines[i]);
            i += 1;
        }
    }
    (imports, body)
}

const STATEMENT_KEYWORDS: &[&str] = &[
    "assert", "async", "await", "class", "def", "del", "elif", "else", "except", "finally", "for",
    "from", "global", "if", "import", "lambda", "nonlocal", "pass", "raise", "return", "try",
    "while", "with", "yield",
];

fn assignment_target(line_chars: &[syntax::CodeChar], line: &str, line_offset: usize) -> Option<String> {
    let first_word: String = line.chars().take_while(|c| is_ident_char(*c)).collect();
    if STATEMENT_KEYWORDS.contains(&first_word.as_str()) {
        return None;
    }
    for (k, c) in line_chars.iter().enumerate() {
        if c.ch != '=' || c.depth != 0 {
            continue;
        }
        let prev = k.checked_sub(1).map(|p| line_chars[p]);
        let next = line_chars.get(k + 1);
        let adjacent = |cc: &syntax::CodeChar, at: usize| cc.offset == at;
        if next.is_some_and(|n| n.ch == '=' && adjacent(n, c.offset + 1)) {
            return None;
        }
        if prev.is_some_and(|p| matches!(p.ch, '=' | '!' | '<' | '>' | ':') && adjacent(&p, c.offset - 1)) {
            // comparison or walrus; `<<=` / `>>=` are augmented assignments
            let p = prev.unwrap();
            let pp = k.checked_sub(2).map(|q| line_chars[q]);
            let shift = matches!(p.ch, '<' | '>')
                && pp.is_some_and(|q| q.ch == p.ch && adjacent(&q, p.offset - 1));
            if !shift {
                return None;
            }
        }
        let mut lhs = line[..c.offset - line_offset].trim_end();
        lhs = lhs.trim_end_matches(['+', '-', '*', '/', '%', '&', '|', '^', '@', '<', '>']);
        // drop a type annotation
        if let Some(colon) = line_chars[..k]
            .iter()
            .find(|cc| cc.ch == ':' && cc.depth == 0)
        {
            lhs = &line[..colon.offset - line_offset];
        }
        let lhs = lhs.trim();
        return (!lhs.is_empty()).then(|| lhs.to_string());
    }
    None
}

/// Finds the snippet's output variable. A `#@output <name>` directive wins
/// and is removed from the text; otherwise the left-hand side of the last
/// top-level assignment is used.
pub fn extract_output(rendered: &str) -> (Option<String>, String) {
    let mut directive = None;
    let mut body = String::with_capacity(rendered.len());
    for line in rendered.split_inclusive('\n') {
        match line.trim_start().strip_prefix(OUTPUT_DIRECTIVE) {
            Some(rest) if rest.is_empty() || rest.starts_with(char::is_whitespace) => {
                let name = rest.trim();
                if !name.is_empty() {
                    directive = Some(name.to_string());
                }
            }
            _ => body.push_str(line),
        }
    }
    if directive.is_some() {
        return (directive, body);
    }

    let scan = syntax::scan(&body);
    let mut last = None;
    let mut offset = 0;
    for (i, line) in body.split_inclusive('\n').enumerate() {
        let starts = scan.statement_starts.get(i).copied().unwrap_or(false);
        if starts && !line.starts_with(char::is_whitespace) {
            let line_chars: Vec<syntax::CodeChar> = scan
                .code
                .iter()
                .filter(|c| c.line == i)
                .copied()
                .collect();
            if let Some(target) = assignment_target(&line_chars, line, offset) {
                last = Some(target);
            }
        }
        offset += line.len();
    }
    (last, body)
}
