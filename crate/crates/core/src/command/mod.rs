//! Model-command navigation language.
//!
//! ```text
//! command := source "." scope "." accessor index? ("." step index?)*
//! source  := "THIS" | "CONNECTED" ("[" selector "]")?
//! scope   := "BLOCK" | "STEREOTYPE" "[" string "]"
//! accessor:= "NAME" | "ATTRIBUTES" | "STEREOTYPEofATTRIBUTE" "[" string "]" | "OUTPUT"
//! step    := "ATTRIBUTES" | "STEREOTYPEofATTRIBUTE" "[" string "]" | "NAME"
//! index   := "[" integer "]"
//! ```
//!
//! Steps may only follow `ATTRIBUTES` or `STEREOTYPEofATTRIBUTE`; `NAME` ends
//! a chain. Selector keys: `Name`, `Nr`, `StereotypeName`,
//! `AttributeValue={"attr": "value", ...}` and `OUTPUT_Name`.

mod ast;
mod eval;
mod parser;

pub use ast::{Accessor, ChainStep, CommandAst, ConnectedSelector, Scope, Source, StepKind};
pub use eval::{connected_candidates, eval_command, CommandValue, EvalError};
pub use parser::{parse_command, CommandParseError, ParseErrorKind};
