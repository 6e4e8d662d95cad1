//! Model-to-text generator: turns a SysML-style formalization of machine
//! learning tasks into a Jupyter notebook, driven by a mapping configuration
//! and a directory of code-snippet templates.
//!
//! The flow is [`model::Model::load`] -> [`context::ContextRegistry::build`]
//! -> per block [`mapping::MappingConfig::select`], [`template::Template`]
//! rendering with bindings from properties and [`command`] evaluation ->
//! [`notebook::compose`] -> serialization. [`pipeline::generate`] runs it end
//! to end.

pub mod command;
pub mod context;
pub mod mapping;
pub mod model;
pub mod notebook;
pub mod pipeline;
mod shape;
pub mod syntax;
pub mod template;

pub use command::{eval_command, parse_command, CommandAst, CommandValue};
pub use context::{BlockContext, ContextRegistry};
pub use mapping::{MappingConfig, MappingEntry, Provenance};
pub use model::{Model, QualifiedName};
pub use notebook::{Cell, CellKind, Notebook};
pub use pipeline::{
    check, eval_for_block, generate, generate_notebook, Diagnostic, EvalRequestError, GenerateError, GenerateOptions,
    GenerationReport,
};
pub use template::{Snippet, Template};
