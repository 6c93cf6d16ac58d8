//! Scenario documents: parsing, validation and canonical serialization.
//!
//! A scenario bundles the objective model, the agent's view of it, what the
//! agent did or planned, optionally what actually happened, and a list of
//! intent queries. Two input forms share one validator: the `.intent` text
//! form and a JSON tree of the same shape.

pub mod ast;
mod build;
mod print;
mod syntax;

use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::intent::{AgentModel, Definition, IntentConfig};
use crate::model::{CausalModel, Event, Intervention, World};

pub use ast::{Document, Pos};

/// Fixed vocabulary of parse failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Syntax,
    UnknownVariable,
    DomainMismatch,
    NonDag,
    Unnormalized,
    BadThreshold,
    InconsistentRealized,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Syntax => "syntax",
            ErrorCode::UnknownVariable => "unknown-variable",
            ErrorCode::DomainMismatch => "domain-mismatch",
            ErrorCode::NonDag => "non-dag",
            ErrorCode::Unnormalized => "unnormalized",
            ErrorCode::BadThreshold => "bad-threshold",
            ErrorCode::InconsistentRealized => "inconsistent-realized",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ErrorCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{code} at {line}:{column}: {message}")]
pub struct ParseError {
    pub code: ErrorCode,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(code: ErrorCode, pos: Pos, message: impl Into<String>) -> Self {
        ParseError { code, line: pos.line, column: pos.column, message: message.into() }
    }
}

/// One requested verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub definition: Definition,
    pub result: Event,
    /// Overrides the scenario's performed action.
    pub action: Option<Intervention>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub objective: CausalModel,
    pub agent: AgentModel,
    /// The agent as it was when acting. Parsing fills it with `agent`
    /// unless the document says otherwise.
    pub snapshot: Option<AgentModel>,
    pub performed: Intervention,
    /// The full plan; `performed` is part of it.
    pub plan: Option<Intervention>,
    pub realized: Option<World>,
    pub config: IntentConfig,
    pub queries: Vec<Query>,
}

impl Scenario {
    /// The plan if declared, else the performed action.
    pub fn base_plan(&self) -> &Intervention {
        self.plan.as_ref().unwrap_or(&self.performed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Text,
    Json,
}

impl SourceFormat {
    /// `.json` files are read as the tree form; anything else as text.
    pub fn from_path(path: &Path) -> SourceFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => SourceFormat::Json,
            _ => SourceFormat::Text,
        }
    }
}

/// Parses and validates the text form.
pub fn parse(src: &str) -> Result<Scenario, ParseError> {
    build::build(&syntax::parse_document(src)?)
}

/// Parses and validates the JSON tree form.
pub fn parse_json(src: &str) -> Result<Scenario, ParseError> {
    let doc: Document = serde_json::from_str(src).map_err(|e| {
        ParseError::new(ErrorCode::Syntax, Pos { line: e.line().max(1), column: e.column().max(1) }, e.to_string())
    })?;
    from_document(&doc)
}

pub fn parse_as(src: &str, format: SourceFormat) -> Result<Scenario, ParseError> {
    match format {
        SourceFormat::Text => parse(src),
        SourceFormat::Json => parse_json(src),
    }
}

/// Parses the text form into a syntax tree, without validation.
pub fn parse_document(src: &str) -> Result<Document, ParseError> {
    syntax::parse_document(src)
}

pub fn from_document(doc: &Document) -> Result<Scenario, ParseError> {
    build::build(doc)
}

/// Canonical syntax tree of a scenario.
pub fn to_document(scenario: &Scenario) -> Document {
    print::to_document(scenario)
}

/// Canonical text form.
pub fn serialize(scenario: &Scenario) -> String {
    print::print_document(&to_document(scenario))
}

/// Canonical JSON tree form.
pub fn serialize_json(scenario: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(&to_document(scenario)).expect("documents serialize");
    s.push('\n');
    s
}
