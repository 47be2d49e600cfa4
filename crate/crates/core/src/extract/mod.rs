//! A small, closed query language for distilling JSON API responses: a path
//! into the body followed by pipe stages (filter, sort, first, count, map,
//! join, format). Programs can be checked against a response schema before
//! any response exists, and evaluation is total: absent fields flow through
//! as an explicit marker instead of crashing.
//!
//! The surface syntax is documented in `docs/extraction-language.md`.

mod check;
mod eval;
mod parse;

use thiserror::Error;

pub use check::check_against_schema;
pub use eval::{interpret_extraction, render_value, ABSENT_TEXT};
pub use parse::parse_program;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("cannot parse extraction program: {detail}")]
    ProgramParseError { detail: String },
    #[error("program does not fit the response schema: {detail}")]
    ProgramCheckError { detail: String },
    #[error("extraction program failed: {detail}")]
    ProgramRuntimeError { detail: String },
}

/// One step into a JSON value.
#[derive(Debug, Clone, PartialEq)]
pub enum PathStep {
    Field(String),
    Index(usize),
}

/// A dotted/indexed path. An empty step list addresses the whole value
/// (written `.` in source).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldPath {
    pub steps: Vec<PathStep>,
}

impl std::fmt::Display for FieldPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.steps.is_empty() {
            return f.write_str(".");
        }
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                PathStep::Field(name) => {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    f.write_str(name)?;
                }
                PathStep::Index(idx) => write!(f, "[{idx}]")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

impl CmpOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Num(f64),
    Bool(bool),
    Null,
}

/// `format` template: literal text with `{}` / `{path}` holes.
#[derive(Debug, Clone, PartialEq)]
pub enum FormatPiece {
    Text(String),
    Hole(FieldPath),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Filter {
        path: FieldPath,
        op: CmpOp,
        literal: Literal,
    },
    Sort {
        path: FieldPath,
        descending: bool,
    },
    First {
        count: usize,
    },
    Count,
    Map {
        path: FieldPath,
    },
    Join {
        separator: String,
    },
    Format {
        pieces: Vec<FormatPiece>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionProgram {
    pub source: FieldPath,
    pub stages: Vec<Stage>,
    /// Original one-line source text, kept for reports.
    pub text: String,
}
