//! Executes one API plan: prompts the caller model turn by turn, validates
//! and dispatches each call, and distills responses with the parser model
//! (extraction program first, direct LLM fallback second).

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::catalog::{
    render, ApiCatalog, CatalogError, EndpointSpec, Method, NO_CALL_MARKER,
};
use crate::extract::{
    check_against_schema, interpret_extraction, parse_program, ABSENT_TEXT,
};
use crate::gateway::{render_prompt, CompletionRequest, Gateway, GatewayError, PromptSet, Role, Slots};
use crate::http::{parse_body, HttpEngine, HttpError, OutboundRequest};

/// Caller turns allowed per plan; a plan needing more calls than this is
/// treated as runaway.
pub const MAX_CALL_TURNS: usize = 4;

/// Response bodies handed to the fallback prompt are cut to this many
/// characters, keeping the head where list items and ids live.
const FALLBACK_BODY_CAP: usize = 3000;

#[derive(Debug, Error)]
pub enum ExecutorError {
    #[error("cannot parse caller output: {detail}")]
    UnparseableCallerOutput { detail: String },
    #[error("call URL still contains a path variable: {url}")]
    UnresolvedPathVariable { url: String },
    #[error("caller repeatedly named an undocumented endpoint: {method} {path}")]
    UnmatchableCall { method: Method, path: String },
    #[error("plan used more than {limit} call turns")]
    OperationLimitExceeded { limit: usize },
    #[error("fallback extraction also failed: {detail}")]
    FallbackAlsoFailed { detail: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Http(#[from] HttpError),
}

/// A fully specified API call, parsed out of one caller turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallDescriptor {
    pub method: Method,
    pub url: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_instructions: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub query_params: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Value>,
}

/// One parsed caller completion: either another call or the wrap-up.
#[derive(Debug, Clone, PartialEq)]
pub enum CallerTurn {
    Call {
        thought: String,
        descriptor: CallDescriptor,
    },
    Finish {
        execution_result: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStrategy {
    Program,
    LlmFallback,
}

/// How one response was distilled. When the program path fails, the failed
/// program and its error ride along with the fallback summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub strategy: ParseStrategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_error: Option<String>,
    pub summary: String,
}

/// An executed call as it appears in records: concrete route path plus the
/// status it returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedCall {
    pub method: Method,
    pub path: String,
    pub status: u16,
}

/// Everything one plan execution produced.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PlanExecution {
    pub summary: String,
    pub calls: Vec<ExecutedCall>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parse_outcomes: Vec<ParseOutcome>,
    /// Undocumented routes the caller tried to hit; never dispatched.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempted_unmatched: Vec<(Method, String)>,
}

pub struct Executor<'a> {
    pub catalog: &'a ApiCatalog,
    pub gateway: &'a Gateway,
    pub http: &'a HttpEngine,
    pub prompts: &'a PromptSet,
}

impl Executor<'_> {
    /// Runs the caller loop for one API plan. The background carries results
    /// of earlier steps so the caller can fill in concrete ids.
    pub async fn execute_plan(
        &self,
        api_plan: &str,
        background: &str,
    ) -> Result<PlanExecution, ExecutorError> {
        if let Some(idx) = api_plan.find(NO_CALL_MARKER) {
            let rest = api_plan[idx + NO_CALL_MARKER.len()..]
                .trim_start_matches(['.', ':', ' '])
                .trim();
            let summary = if rest.is_empty() { api_plan.trim() } else { rest };
            return Ok(PlanExecution {
                summary: summary.to_string(),
                ..Default::default()
            });
        }

        let docs = self.catalog.caller_docs_for_plan(api_plan)?;
        let mut execution = PlanExecution::default();
        let mut scratchpad = String::new();
        let mut call_turns = 0usize;
        let mut consecutive_failures = 0usize;
        loop {
            let (turn, raw) = self
                .formulate_call(api_plan, background, &docs, &scratchpad)
                .await?;
            let descriptor = match turn {
                CallerTurn::Finish { execution_result } => {
                    execution.summary = execution_result;
                    return Ok(execution);
                }
                CallerTurn::Call { descriptor, .. } => descriptor,
            };
            call_turns += 1;
            if call_turns > MAX_CALL_TURNS {
                return Err(ExecutorError::OperationLimitExceeded {
                    limit: MAX_CALL_TURNS,
                });
            }

            let observation = match self.resolve(&descriptor)? {
                Resolution::Unmatched { method, path } => {
                    execution.attempted_unmatched.push((method, path.clone()));
                    consecutive_failures += 1;
                    if consecutive_failures > 1 {
                        return Err(ExecutorError::UnmatchableCall { method, path });
                    }
                    format!(
                        "Error: {method} {path} is not a documented endpoint. \
                         Only call endpoints from the documentation above."
                    )
                }
                Resolution::Matched { endpoint, path, outbound } => {
                    let exchange = self.http.dispatch(&outbound).await?;
                    execution.calls.push(ExecutedCall {
                        method: descriptor.method,
                        path: path.clone(),
                        status: exchange.status,
                    });
                    if !(200..300).contains(&(exchange.status as usize)) {
                        consecutive_failures += 1;
                        let mut obs = status_observation(exchange.status, &exchange.response_body);
                        if consecutive_failures > 1 {
                            obs.push_str(
                                " Do not retry this call; report the failure in the Execution Result.",
                            );
                        }
                        obs
                    } else {
                        consecutive_failures = 0;
                        match &descriptor.output_instructions {
                            Some(_) => {
                                let body = parse_body(&exchange)?;
                                let outcome =
                                    self.parse_response(&descriptor, endpoint, &body).await?;
                                let summary = outcome.summary.clone();
                                execution.parse_outcomes.push(outcome);
                                summary
                            }
                            None => status_observation(exchange.status, ""),
                        }
                    }
                }
            };
            scratchpad.push_str(&raw);
            scratchpad.push_str("\nResponse: ");
            scratchpad.push_str(&observation);
            scratchpad.push_str("\nThought:");
        }
    }

    /// One caller turn: render the prompt, complete, parse.
    pub async fn formulate_call(
        &self,
        api_plan: &str,
        background: &str,
        docs: &str,
        scratchpad: &str,
    ) -> Result<(CallerTurn, String), ExecutorError> {
        let slots: Slots<'_> = BTreeMap::from([
            ("api_url", self.catalog.base_url.clone()),
            ("api_docs", docs.to_string()),
            ("icl_examples", self.prompts.icl_examples(Role::Caller).to_string()),
            ("background", background_text(background)),
            ("api_plan", api_plan.to_string()),
            ("scratchpad", scratchpad.to_string()),
        ]);
        let prompt = render_prompt(&self.prompts.caller, &slots)?;
        let completion = self
            .gateway
            .complete(CompletionRequest::new(
                Role::Caller,
                prompt,
                self.prompts.caller.stop_sequences.clone(),
            ))
            .await?;
        let turn = parse_caller_turn(&completion)?;
        Ok((turn, completion))
    }

    fn resolve(&self, descriptor: &CallDescriptor) -> Result<Resolution<'_>, ExecutorError> {
        let path = self.catalog.route_path_of(&descriptor.url);
        let Some(route_match) = self.catalog.match_route(descriptor.method, &path)? else {
            return Ok(Resolution::Unmatched {
                method: descriptor.method,
                path,
            });
        };
        // Query pairs the model wrote into the URL directly still count.
        let mut params = url_query_pairs(&descriptor.url);
        params.extend(descriptor.query_params.clone());
        let outbound = OutboundRequest {
            method: descriptor.method,
            url: format!("{}{}", self.catalog.base_url, path),
            params,
            body: descriptor.body.clone(),
        };
        Ok(Resolution::Matched {
            endpoint: route_match.endpoint,
            path,
            outbound,
        })
    }

    /// Distills one response body according to the call's output
    /// instructions: generated extraction program when a schema exists,
    /// direct LLM extraction as the fallback.
    pub async fn parse_response(
        &self,
        descriptor: &CallDescriptor,
        endpoint: &EndpointSpec,
        body: &Value,
    ) -> Result<ParseOutcome, ExecutorError> {
        let query = descriptor
            .output_instructions
            .clone()
            .unwrap_or_else(|| descriptor.description.clone());
        let schema = &endpoint.response_schema;
        if schema.is_empty() {
            return self.fallback(&query, body, None, None).await;
        }

        let slots: Slots<'_> = BTreeMap::from([
            ("api_path", endpoint.label()),
            ("api_description", endpoint.description.clone()),
            ("api_param", render::params_summary(endpoint)),
            ("response_schema", render::schema_text(schema)),
            ("response_description", endpoint.response_description.clone()),
            ("icl_examples", self.prompts.icl_examples(Role::Parser).to_string()),
            ("query", query.clone()),
        ]);
        let prompt = render_prompt(&self.prompts.parser, &slots)?;
        let program_text = self
            .gateway
            .complete(CompletionRequest::new(
                Role::Parser,
                prompt,
                self.prompts.parser.stop_sequences.clone(),
            ))
            .await?
            .trim()
            .to_string();

        let program = match parse_program(&program_text) {
            Ok(p) => p,
            Err(e) => {
                return self
                    .fallback(&query, body, Some(program_text), Some(e.to_string()))
                    .await
            }
        };
        if let Err(e) = check_against_schema(&program, schema) {
            return self
                .fallback(&query, body, Some(program_text), Some(e.to_string()))
                .await;
        }
        match interpret_extraction(&program, body) {
            Ok(text) => {
                let trimmed = text.trim();
                let summary = if trimmed.is_empty() || trimmed == ABSENT_TEXT {
                    "no matching items".to_string()
                } else {
                    text
                };
                Ok(ParseOutcome {
                    strategy: ParseStrategy::Program,
                    program_text: Some(program_text),
                    program_error: None,
                    summary,
                })
            }
            Err(e) => {
                self.fallback(&query, body, Some(program_text), Some(e.to_string()))
                    .await
            }
        }
    }

    async fn fallback(
        &self,
        query: &str,
        body: &Value,
        program_text: Option<String>,
        program_error: Option<String>,
    ) -> Result<ParseOutcome, ExecutorError> {
        let pretty = serde_json::to_string_pretty(body).unwrap_or_else(|_| body.to_string());
        let slots: Slots<'_> = BTreeMap::from([
            ("response_body", truncate_head(&pretty, FALLBACK_BODY_CAP)),
            ("query", query.to_string()),
        ]);
        let prompt = render_prompt(&self.prompts.parser_fallback, &slots)?;
        let completion = self
            .gateway
            .complete(CompletionRequest::new(
                Role::Parser,
                prompt,
                self.prompts.parser_fallback.stop_sequences.clone(),
            ))
            .await?;
        let summary = completion.trim().to_string();
        if summary.is_empty() {
            return Err(ExecutorError::FallbackAlsoFailed {
                detail: "fallback extraction returned empty text".into(),
            });
        }
        Ok(ParseOutcome {
            strategy: ParseStrategy::LlmFallback,
            program_text,
            program_error,
            summary,
        })
    }
}

enum Resolution<'a> {
    Matched {
        endpoint: &'a EndpointSpec,
        path: String,
        outbound: OutboundRequest,
    },
    Unmatched {
        method: Method,
        path: String,
    },
}

/// Empty background reads awkwardly in prompts; give it a fixed phrase.
fn background_text(background: &str) -> String {
    if background.trim().is_empty() {
        "No background information.".to_string()
    } else {
        background.to_string()
    }
}

fn status_observation(status: u16, body: &str) -> String {
    let reason = reqwest::StatusCode::from_u16(status)
        .ok()
        .and_then(|s| s.canonical_reason())
        .unwrap_or("");
    let mut obs = if reason.is_empty() {
        format!("Status: {status}.")
    } else {
        format!("Status: {status} {reason}.")
    };
    let body = body.trim();
    if body.is_empty() {
        obs.push_str(" The response body is empty.");
    } else {
        obs.push(' ');
        obs.push_str(&truncate_head(body, 240));
    }
    obs
}

fn truncate_head(text: &str, cap: usize) -> String {
    if text.chars().count() <= cap {
        return text.to_string();
    }
    let head: String = text.chars().take(cap).collect();
    format!("{head}\n... (truncated)")
}

fn url_query_pairs(url: &str) -> BTreeMap<String, String> {
    let Ok(parsed) = url::Url::parse(url) else {
        return BTreeMap::new();
    };
    parsed
        .query_pairs()
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect()
}

/// Parses one caller completion. The earliest of `Operation:` and
/// `Execution Result:` decides the turn kind.
pub fn parse_caller_turn(text: &str) -> Result<CallerTurn, ExecutorError> {
    let op_idx = text.find("Operation:");
    let finish_idx = text.find("Execution Result:");
    match (op_idx, finish_idx) {
        (None, None) => Err(ExecutorError::UnparseableCallerOutput {
            detail: "neither 'Operation:' nor 'Execution Result:' found".into(),
        }),
        (Some(op), Some(finish)) if finish < op => Ok(finish_turn(text, finish)),
        (None, Some(finish)) => Ok(finish_turn(text, finish)),
        (Some(op), _) => call_turn(text, op),
    }
}

fn finish_turn(text: &str, idx: usize) -> CallerTurn {
    CallerTurn::Finish {
        execution_result: text[idx + "Execution Result:".len()..].trim().to_string(),
    }
}

fn call_turn(text: &str, op_idx: usize) -> Result<CallerTurn, ExecutorError> {
    let thought = text[..op_idx].trim().to_string();
    let after_op = &text[op_idx + "Operation:".len()..];
    let method_line = after_op.lines().next().unwrap_or("").trim();
    let method = Method::from_str(method_line).map_err(|e| {
        ExecutorError::UnparseableCallerOutput {
            detail: format!("bad Operation line: {e}"),
        }
    })?;
    let input_idx = after_op
        .find("Input:")
        .ok_or_else(|| ExecutorError::UnparseableCallerOutput {
            detail: "missing 'Input:' line".into(),
        })?;
    let json_text = balanced_json(&after_op[input_idx + "Input:".len()..])?;
    let input: Value =
        serde_json::from_str(&json_text).map_err(|e| ExecutorError::UnparseableCallerOutput {
            detail: format!("Input is not valid JSON: {e}"),
        })?;
    let Some(url) = input.get("url").and_then(Value::as_str) else {
        return Err(ExecutorError::UnparseableCallerOutput {
            detail: "Input has no \"url\" key".into(),
        });
    };
    if url.contains(['{', '}']) {
        return Err(ExecutorError::UnresolvedPathVariable { url: url.to_string() });
    }
    let mut query_params = BTreeMap::new();
    if let Some(params) = input.get("params").and_then(Value::as_object) {
        for (k, v) in params {
            let text = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                other => other.to_string(),
            };
            query_params.insert(k.clone(), text);
        }
    }
    let output_instructions = input
        .get("output_instructions")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    Ok(CallerTurn::Call {
        thought,
        descriptor: CallDescriptor {
            method,
            url: url.to_string(),
            description: input
                .get("description")
                .and_then(Value::as_str)
                .unwrap_or("")
                .to_string(),
            output_instructions,
            query_params,
            body: input.get("data").cloned(),
        },
    })
}

/// Extracts the first balanced JSON object, tolerating prose after it.
fn balanced_json(text: &str) -> Result<String, ExecutorError> {
    let start = text
        .find('{')
        .ok_or_else(|| ExecutorError::UnparseableCallerOutput {
            detail: "no JSON object after 'Input:'".into(),
        })?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(text[start..start + i + 1].to_string());
                }
            }
            _ => {}
        }
    }
    Err(ExecutorError::UnparseableCallerOutput {
        detail: "unterminated JSON object after 'Input:'".into(),
    })
}
