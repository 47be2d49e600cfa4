//! Static check of a program against a response schema, run before the
//! response exists. Catches references to fields the schema does not define
//! and comparisons whose literal type cannot match the field type.

use crate::catalog::SchemaNode;

use super::{ExtractError, ExtractionProgram, FieldPath, FormatPiece, Literal, PathStep, Stage};

/// Verifies every path in the program against the schema. Nodes beyond the
/// reference inlining cap (`Recursive`) cannot be checked and are accepted.
pub fn check_against_schema(
    program: &ExtractionProgram,
    schema: &SchemaNode,
) -> Result<(), ExtractError> {
    if schema.is_empty() {
        return Err(ExtractError::ProgramCheckError {
            detail: "the response has no documented schema".into(),
        });
    }
    let mut current = walk(schema, &program.source, "")?;
    for stage in &program.stages {
        current = check_stage(stage, current)?;
    }
    Ok(())
}

/// Resolves a path against a schema node, descending into object fields and
/// array items.
fn walk(node: &SchemaNode, path: &FieldPath, context: &str) -> Result<SchemaNode, ExtractError> {
    let mut cur = node.clone();
    let mut traversed = String::new();
    for step in &path.steps {
        cur = match (&cur, step) {
            (SchemaNode::Recursive, _) => SchemaNode::Recursive,
            (SchemaNode::Object { properties, .. }, PathStep::Field(name)) => properties
                .get(name)
                .cloned()
                .ok_or_else(|| ExtractError::ProgramCheckError {
                    detail: format!("field '{name}' does not exist{}", at(context, &traversed)),
                })?,
            (SchemaNode::Array { items, .. }, PathStep::Index(_)) => (**items).clone(),
            (_, PathStep::Field(name)) => {
                return Err(ExtractError::ProgramCheckError {
                    detail: format!(
                        "field '{name}' does not exist{}: parent is not an object",
                        at(context, &traversed)
                    ),
                })
            }
            (_, PathStep::Index(_)) => {
                return Err(ExtractError::ProgramCheckError {
                    detail: format!("index applied to a non-array{}", at(context, &traversed)),
                })
            }
        };
        match step {
            PathStep::Field(name) => {
                if !traversed.is_empty() {
                    traversed.push('.');
                }
                traversed.push_str(name);
            }
            PathStep::Index(i) => traversed.push_str(&format!("[{i}]")),
        }
    }
    Ok(cur)
}

fn at(context: &str, traversed: &str) -> String {
    match (context.is_empty(), traversed.is_empty()) {
        (true, true) => " in the response schema".to_string(),
        (true, false) => format!(" under '{traversed}'"),
        (false, true) => format!(" in {context}"),
        (false, false) => format!(" under '{traversed}' in {context}"),
    }
}

/// The schema of one element for stages that iterate: an array yields its
/// item schema, anything else is treated as a one-item list of itself.
fn element_of(node: &SchemaNode) -> SchemaNode {
    match node {
        SchemaNode::Array { items, .. } => (**items).clone(),
        other => other.clone(),
    }
}

fn check_stage(stage: &Stage, current: SchemaNode) -> Result<SchemaNode, ExtractError> {
    match stage {
        Stage::Filter { path, literal, .. } => {
            let key = walk(&element_of(&current), path, "the filtered items")?;
            check_literal_type(&key, literal, path)?;
            Ok(current)
        }
        Stage::Sort { path, .. } => {
            walk(&element_of(&current), path, "the sorted items")?;
            Ok(current)
        }
        Stage::First { .. } => Ok(current),
        Stage::Count => Ok(SchemaNode::primitive("integer")),
        Stage::Map { path } => {
            let item = walk(&element_of(&current), path, "the mapped items")?;
            Ok(SchemaNode::array(item))
        }
        Stage::Join { .. } => Ok(SchemaNode::primitive("string")),
        Stage::Format { pieces } => {
            let element = element_of(&current);
            for piece in pieces {
                if let FormatPiece::Hole(path) = piece {
                    if !path.steps.is_empty() {
                        walk(&element, path, "the formatted items")?;
                    }
                }
            }
            Ok(match current {
                SchemaNode::Array { .. } => SchemaNode::array(SchemaNode::primitive("string")),
                _ => SchemaNode::primitive("string"),
            })
        }
    }
}

/// Primitive schema types must be comparable with the literal; unknown or
/// structured types are left to the runtime.
fn check_literal_type(
    node: &SchemaNode,
    literal: &Literal,
    path: &FieldPath,
) -> Result<(), ExtractError> {
    let SchemaNode::Primitive { primitive, .. } = node else {
        return Ok(());
    };
    let ok = match literal {
        Literal::Str(_) => primitive == "string",
        Literal::Num(_) => primitive == "integer" || primitive == "number",
        Literal::Bool(_) => primitive == "boolean",
        Literal::Null => true,
    };
    if ok {
        Ok(())
    } else {
        Err(ExtractError::ProgramCheckError {
            detail: format!("'{path}' has type {primitive}, which the literal cannot match"),
        })
    }
}
