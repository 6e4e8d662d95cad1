//! Notebook composition and the Jupyter Notebook (format 4) writer.

use std::path::Path;
use std::process::Command;

use indexmap::IndexSet;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::context::ContextRegistry;
use crate::mapping::MappingConfig;
use crate::syntax;

pub const NBFORMAT: u32 = 4;
pub const NBFORMAT_MINOR: u32 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NotebookError {
    #[error("block `{0}` has no rendered snippet")]
    MissingSnippet(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Markdown,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub kind: CellKind,
    pub source: String,
}

impl Cell {
    pub fn code(source: impl Into<String>) -> Cell {
        Cell {
            kind: CellKind::Code,
            source: source.into(),
        }
    }

    pub fn markdown(source: impl Into<String>) -> Cell {
        Cell {
            kind: CellKind::Markdown,
            source: source.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Notebook {
    pub cells: Vec<Cell>,
    pub kernel_name: Option<String>,
}

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Drops leading and trailing blank lines and collapses every inner run of
/// blank lines into a single empty line.
pub fn trim_blank_lines(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let Some(first) = lines.iter().position(|l| !is_blank(l)) else {
        return String::new();
    };
    let last = lines.iter().rposition(|l| !is_blank(l)).unwrap_or(first);
    let mut out: Vec<&str> = Vec::new();
    for line in &lines[first..=last] {
        if is_blank(line) {
            if out.last().is_some_and(|l| l.is_empty()) {
                continue;
            }
            out.push("");
        } else {
            out.push(line);
        }
    }
    out.join("\n")
}

/// Builds the notebook from rendered contexts in execution order: a leading
/// cell with the deduplicated imports, then per context one markdown cell per
/// comment followed by its code cell.
pub fn compose(
    registry: &ContextRegistry<'_>,
    config: &MappingConfig,
    kernel_name: Option<&str>,
) -> Result<Notebook, NotebookError> {
    let mut imports: IndexSet<String> = IndexSet::new();
    let mut body_cells = Vec::new();
    for ctx in registry.iter() {
        let snippet = ctx
            .snippet
            .as_ref()
            .ok_or_else(|| NotebookError::MissingSnippet(ctx.block_ref.to_string()))?;
        for line in &snippet.imports {
            imports.insert(line.trim().to_string());
        }
        for comment in &ctx.comments {
            body_cells.push(Cell::markdown(comment.clone()));
        }
        let source = if config.trim_empty_lines {
            trim_blank_lines(&snippet.body)
        } else {
            snippet.body.strip_suffix('\n').unwrap_or(&snippet.body).to_string()
        };
        body_cells.push(Cell::code(source));
    }
    let mut cells = Vec::with_capacity(body_cells.len() + 1);
    if !imports.is_empty() {
        let joined: Vec<&str> = imports.iter().map(String::as_str).collect();
        cells.push(Cell::code(joined.join("\n")));
    }
    cells.extend(body_cells);
    Ok(Notebook {
        cells,
        kernel_name: kernel_name.map(str::to_string),
    })
}

/// Source as a list of lines, each but the last keeping its `\n`.
fn source_lines(source: &str) -> Vec<&str> {
    source.split_inclusive('\n').collect()
}

impl Notebook {
    pub fn to_value(&self) -> Value {
        let cells: Vec<Value> = self
            .cells
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                let id = format!("cell-{i}");
                match cell.kind {
                    CellKind::Code => json!({
                        "cell_type": "code",
                        "execution_count": null,
                        "id": id,
                        "metadata": {},
                        "outputs": [],
                        "source": source_lines(&cell.source),
                    }),
                    CellKind::Markdown => json!({
                        "cell_type": "markdown",
                        "id": id,
                        "metadata": {},
                        "source": source_lines(&cell.source),
                    }),
                }
            })
            .collect();
        let metadata = match &self.kernel_name {
            Some(k) => json!({"kernelspec": {"display_name": k, "name": k}}),
            None => json!({}),
        };
        json!({
            "cells": cells,
            "metadata": metadata,
            "nbformat": NBFORMAT,
            "nbformat_minor": NBFORMAT_MINOR,
        })
    }

    /// Byte-deterministic `.ipynb` document, one-space indented, with a
    /// trailing newline.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let formatter = serde_json::ser::PrettyFormatter::with_indent(b" ");
        let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
        self.to_value()
            .serialize(&mut ser)
            .expect("serializing a JSON value into memory cannot fail");
        out.push(b'\n');
        out
    }
}

/// Lexical check of every code cell of a written notebook plus an optional
/// external validator. Problems come back as warnings; nothing here fails.
///
/// `validator` is split into arguments shell-style; every `{file}` in an
/// argument is replaced with the notebook path. No shell is involved.
pub fn validate_syntax(path: &Path, validator: Option<&str>) -> Vec<String> {
    let mut warnings = Vec::new();
    match std::fs::read(path)
        .map_err(|e| e.to_string())
        .and_then(|b| serde_json::from_slice::<Value>(&b).map_err(|e| e.to_string()))
    {
        Ok(doc) => {
            let cells = doc["cells"].as_array().cloned().unwrap_or_default();
            for (i, cell) in cells.iter().enumerate() {
                if cell["cell_type"] != "code" {
                    continue;
                }
                let source: String = match &cell["source"] {
                    Value::String(s) => s.clone(),
                    Value::Array(lines) => lines.iter().filter_map(Value::as_str).collect(),
                    _ => String::new(),
                };
                if let Some(issue) = syntax::check_balance(&source) {
                    warnings.push(format!("cell {i}: {issue}"));
                }
            }
        }
        Err(e) => warnings.push(format!("cannot read {}: {e}", path.display())),
    }
    if let Some(cmd) = validator {
        if let Some(w) = run_validator(path, cmd) {
            warnings.push(w);
        }
    }
    warnings
}

fn run_validator(path: &Path, cmd: &str) -> Option<String> {
    let args = match shell_words::split(cmd) {
        Ok(a) if !a.is_empty() => a,
        Ok(_) => return Some("validator command is empty".to_string()),
        Err(e) => return Some(format!("cannot parse validator command: {e}")),
    };
    let file = path.to_string_lossy();
    let args: Vec<String> = args.iter().map(|a| a.replace("{file}", &file)).collect();
    match Command::new(&args[0]).args(&args[1..]).output() {
        Err(e) => Some(format!("validator `{}` could not be run: {e}", args[0])),
        Ok(out) if !out.status.success() => {
            let mut text = String::from_utf8_lossy(&out.stdout).into_owned();
            text.push_str(&String::from_utf8_lossy(&out.stderr));
            Some(format!("validator failed ({}): {}", out.status, text.trim()))
        }
        Ok(_) => None,
    }
}
