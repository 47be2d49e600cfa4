//! Evaluation of extraction programs over a concrete JSON body. Total by
//! design: a missing field or index yields the absent marker and keeps
//! flowing. The only runtime error is a type mismatch in a comparison.

use serde_json::Value;

use super::{CmpOp, ExtractError, ExtractionProgram, FieldPath, FormatPiece, Literal, PathStep, Stage};

/// Marker text produced when a program lands on nothing.
pub const ABSENT_TEXT: &str = "(absent)";

/// Runs a program and renders the result as text. `None`-ish results (an
/// absent path, an empty list) render as the absent marker or empty text.
pub fn interpret_extraction(
    program: &ExtractionProgram,
    body: &Value,
) -> Result<String, ExtractError> {
    let mut current: Option<Value> = resolve(&program.source, body);
    for stage in &program.stages {
        current = apply(stage, current)?;
    }
    Ok(match current {
        None => ABSENT_TEXT.to_string(),
        Some(v) => render_value(&v),
    })
}

fn resolve(path: &FieldPath, value: &Value) -> Option<Value> {
    let mut cur = value;
    for step in &path.steps {
        cur = match step {
            PathStep::Field(name) => cur.as_object()?.get(name)?,
            PathStep::Index(idx) => cur.as_array()?.get(*idx)?,
        };
    }
    Some(cur.clone())
}

/// Array stages treat a scalar as a one-item list; an absent input stays
/// absent through every stage except `count`, which sees zero items.
fn as_items(value: Value) -> Vec<Value> {
    match value {
        Value::Array(items) => items,
        other => vec![other],
    }
}

fn apply(stage: &Stage, input: Option<Value>) -> Result<Option<Value>, ExtractError> {
    match stage {
        Stage::Count => {
            let n = match input {
                None => 0,
                Some(v) => as_items(v).len(),
            };
            return Ok(Some(Value::from(n)));
        }
        _ => {}
    }
    let Some(value) = input else {
        return Ok(None);
    };
    match stage {
        Stage::Filter { path, op, literal } => {
            let mut kept = Vec::new();
            for item in as_items(value) {
                let Some(candidate) = resolve(path, &item) else {
                    continue;
                };
                if compare(&candidate, *op, literal)? {
                    kept.push(item);
                }
            }
            Ok(Some(Value::Array(kept)))
        }
        Stage::Sort { path, descending } => {
            let items = as_items(value);
            let mut keyed: Vec<(Option<Value>, Value)> = items
                .into_iter()
                .map(|item| (resolve(path, &item), item))
                .collect();
            // Validate key types up front so sort comparisons cannot disagree.
            let mut kinds = keyed.iter().filter_map(|(k, _)| k.as_ref()).map(kind_of);
            if let Some(first) = kinds.next() {
                for k in kinds {
                    if k != first {
                        return Err(ExtractError::ProgramRuntimeError {
                            detail: format!("sort keys mix {first} and {k}"),
                        });
                    }
                }
            }
            keyed.sort_by(|(a, _), (b, _)| order_keys(a, b));
            if *descending {
                keyed.reverse();
                // Absent keys stay last regardless of direction.
                let absent_count = keyed.iter().take_while(|(k, _)| k.is_none()).count();
                keyed.rotate_left(absent_count);
            }
            Ok(Some(Value::Array(keyed.into_iter().map(|(_, v)| v).collect())))
        }
        Stage::First { count } => {
            let mut items = as_items(value);
            items.truncate(*count);
            Ok(Some(Value::Array(items)))
        }
        Stage::Map { path } => {
            let items = as_items(value)
                .into_iter()
                .map(|item| resolve(path, &item).unwrap_or(Value::Null))
                .collect();
            Ok(Some(Value::Array(items)))
        }
        Stage::Join { separator } => {
            let text = as_items(value)
                .iter()
                .map(render_value)
                .collect::<Vec<_>>()
                .join(separator);
            Ok(Some(Value::String(text)))
        }
        Stage::Format { pieces } => match value {
            Value::Array(items) => Ok(Some(Value::Array(
                items
                    .into_iter()
                    .map(|item| Value::String(format_one(pieces, &item)))
                    .collect(),
            ))),
            single => Ok(Some(Value::String(format_one(pieces, &single)))),
        },
        Stage::Count => unreachable!("handled above"),
    }
}

fn format_one(pieces: &[FormatPiece], value: &Value) -> String {
    let mut out = String::new();
    for piece in pieces {
        match piece {
            FormatPiece::Text(t) => out.push_str(t),
            FormatPiece::Hole(path) if path.steps.is_empty() => out.push_str(&render_value(value)),
            FormatPiece::Hole(path) => match resolve(path, value) {
                Some(v) => out.push_str(&render_value(&v)),
                None => out.push_str(ABSENT_TEXT),
            },
        }
    }
    out
}

/// Human-facing rendering: strings bare, numbers as written, arrays joined
/// by commas, objects as compact JSON.
pub fn render_value(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Null => "null".to_string(),
        Value::Array(items) => items.iter().map(render_value).collect::<Vec<_>>().join(", "),
        Value::Object(_) => serde_json::to_string(value).unwrap_or_default(),
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Number(_) => "number",
        Value::Bool(_) => "boolean",
        Value::Null => "null",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn order_keys(a: &Option<Value>, b: &Option<Value>) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(a), Some(b)) => match (a, b) {
            (Value::Number(x), Value::Number(y)) => x
                .as_f64()
                .unwrap_or(f64::NAN)
                .partial_cmp(&y.as_f64().unwrap_or(f64::NAN))
                .unwrap_or(Ordering::Equal),
            (Value::String(x), Value::String(y)) => x.cmp(y),
            _ => Ordering::Equal,
        },
    }
}

fn compare(candidate: &Value, op: CmpOp, literal: &Literal) -> Result<bool, ExtractError> {
    use std::cmp::Ordering;
    let ordering = match (candidate, literal) {
        (Value::Number(n), Literal::Num(m)) => n
            .as_f64()
            .unwrap_or(f64::NAN)
            .partial_cmp(m)
            .ok_or_else(|| ExtractError::ProgramRuntimeError {
                detail: "number comparison is undefined".into(),
            })?,
        (Value::String(s), Literal::Str(t)) => s.as_str().cmp(t.as_str()),
        (Value::Bool(a), Literal::Bool(b)) => {
            return match op {
                CmpOp::Eq => Ok(a == b),
                CmpOp::Ne => Ok(a != b),
                _ => Err(ExtractError::ProgramRuntimeError {
                    detail: "booleans only support == and !=".into(),
                }),
            }
        }
        (Value::Null, Literal::Null) => {
            return match op {
                CmpOp::Eq => Ok(true),
                CmpOp::Ne => Ok(false),
                _ => Err(ExtractError::ProgramRuntimeError {
                    detail: "null only supports == and !=".into(),
                }),
            }
        }
        (value, Literal::Null) => {
            return match op {
                CmpOp::Eq => Ok(value.is_null()),
                CmpOp::Ne => Ok(!value.is_null()),
                _ => Err(ExtractError::ProgramRuntimeError {
                    detail: "null only supports == and !=".into(),
                }),
            }
        }
        (value, literal) => {
            return Err(ExtractError::ProgramRuntimeError {
                detail: format!(
                    "cannot compare {} value with {} literal",
                    kind_of(value),
                    literal_kind(literal)
                ),
            })
        }
    };
    Ok(match op {
        CmpOp::Eq => ordering == Ordering::Equal,
        CmpOp::Ne => ordering != Ordering::Equal,
        CmpOp::Gt => ordering == Ordering::Greater,
        CmpOp::Ge => ordering != Ordering::Less,
        CmpOp::Lt => ordering == Ordering::Less,
        CmpOp::Le => ordering != Ordering::Greater,
    })
}

fn literal_kind(l: &Literal) -> &'static str {
    match l {
        Literal::Str(_) => "string",
        Literal::Num(_) => "number",
        Literal::Bool(_) => "boolean",
        Literal::Null => "null",
    }
}
