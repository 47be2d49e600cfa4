//! Drives one session: the planner proposes natural-language steps, the
//! selector turns each step into an API plan naming documented endpoints,
//! and the executor carries the plan out. Loops until the planner produces
//! a final answer, a failure is diagnosed, or the step budget runs out.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{extract_route_mentions, ApiCatalog, Method, NO_CALL_MARKER};
use crate::executor::{ExecutedCall, Executor, ExecutorError, ParseOutcome};
use crate::gateway::{render_prompt, CompletionRequest, Gateway, GatewayError, PromptSet, Role, Slots};
use crate::http::HttpEngine;

/// Planner steps allowed per session before the run is declared stuck.
pub const DEFAULT_STEP_BUDGET: usize = 10;

/// Consecutive `Continue` steps allowed before the planner counts as stalled.
const MAX_CONSECUTIVE_CONTINUES: usize = 2;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("cannot parse planner output: {detail}")]
    UnparseablePlannerOutput { detail: String },
}

/// What the planner decided for the next step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlSignal {
    /// A fresh plan step; the text is the step itself.
    Proceed(String),
    /// The previous step was not finished; re-select with the carried text
    /// (empty text reuses the previous step verbatim).
    Continue(String),
    /// The session is done; the text is the final answer.
    End(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    Proceed,
    Continue,
    End,
}

/// One planner step and everything it caused.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub nl_plan: String,
    pub control: ControlKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_plan: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution_result: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub calls: Vec<ExecutedCall>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parse_outcomes: Vec<ParseOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempted_unmatched: Vec<(Method, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Finished,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    UnparseablePlanner,
    NoValidEndpointInPlan,
    PlannerStalled,
    StepBudgetExhausted,
    ExecutionError,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionFailure {
    pub kind: FailureKind,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempted_routes: Vec<(Method, String)>,
}

/// Full trace of one session, failed or finished.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    pub instruction: String,
    pub status: SessionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<SessionFailure>,
    pub steps: Vec<StepRecord>,
    pub calls_made: Vec<ExecutedCall>,
    pub step_budget: usize,
}

impl Session {
    /// All undocumented routes any model named, across selector and caller.
    pub fn attempted_unmatched(&self) -> Vec<(Method, String)> {
        let mut seen = Vec::new();
        let from_failure = self
            .failure
            .iter()
            .flat_map(|f| f.attempted_routes.iter().cloned());
        let from_steps = self
            .steps
            .iter()
            .flat_map(|s| s.attempted_unmatched.iter().cloned());
        for pair in from_failure.chain(from_steps) {
            if !seen.contains(&pair) {
                seen.push(pair);
            }
        }
        seen
    }
}

/// Parses one planner completion into a control signal.
pub fn parse_planner_output(text: &str) -> Result<ControlSignal, AgentError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(AgentError::UnparseablePlannerOutput {
            detail: "planner returned empty text".into(),
        });
    }
    if let Some(idx) = trimmed.find("Final Answer:") {
        let answer = trimmed[idx + "Final Answer:".len()..].trim().to_string();
        return Ok(ControlSignal::End(answer));
    }
    let token = "continue";
    if trimmed.len() >= token.len() && trimmed[..token.len()].eq_ignore_ascii_case(token) {
        let rest = &trimmed[token.len()..];
        let boundary = rest
            .chars()
            .next()
            .map_or(true, |c| matches!(c, '.' | ':' | ',') || c.is_whitespace());
        if boundary {
            let rest = rest.trim_start_matches(['.', ':', ',']).trim();
            return Ok(ControlSignal::Continue(rest.to_string()));
        }
    }
    Ok(ControlSignal::Proceed(trimmed.to_string()))
}

/// State of the selector's in-context history for one plan chain: the
/// original plan stays in the prompt while `Continue` steps grow the
/// scratchpad with prior selections and results.
struct SelectorChain {
    origin_plan: String,
    scratchpad: String,
    call_no: usize,
    last: Option<(String, String)>,
}

impl SelectorChain {
    fn start(plan: &str) -> Self {
        SelectorChain {
            origin_plan: plan.to_string(),
            scratchpad: "API calling 1:".to_string(),
            call_no: 1,
            last: None,
        }
    }

    fn extend(&mut self, continue_text: &str) {
        let (api_plan, result) = self.last.clone().unwrap_or_default();
        self.call_no += 1;
        self.scratchpad.push_str(&format!(
            " {api_plan}\nAPI response: {result}\nInstruction: Continue. {continue_text}\nAPI calling {}:",
            self.call_no
        ));
    }
}

enum Selection {
    Plan(String),
    NoValidEndpoint {
        detail: String,
        attempted: Vec<(Method, String)>,
    },
}

pub struct SessionEngine {
    pub catalog: ApiCatalog,
    pub gateway: Gateway,
    pub http: HttpEngine,
    pub prompts: PromptSet,
    pub step_budget: usize,
}

impl SessionEngine {
    pub fn new(catalog: ApiCatalog, gateway: Gateway, http: HttpEngine, prompts: PromptSet) -> Self {
        SessionEngine {
            catalog,
            gateway,
            http,
            prompts,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn with_step_budget(mut self, budget: usize) -> Self {
        self.step_budget = budget.max(1);
        self
    }

    /// Runs one instruction to completion. Model misbehavior and transport
    /// faults both land in the returned session as a failure record, so a
    /// benchmark run never aborts on a single bad item.
    pub async fn run(&self, instruction: &str) -> Session {
        let mut session = Session {
            instruction: instruction.to_string(),
            status: SessionStatus::Failed,
            final_answer: None,
            failure: None,
            steps: Vec::new(),
            calls_made: Vec::new(),
            step_budget: self.step_budget,
        };
        let digest = self.catalog.selector_digest();
        let mut planner_scratch = "Plan step 1:".to_string();
        let mut results: Vec<String> = Vec::new();
        let mut chain: Option<SelectorChain> = None;
        let mut prev_nl_plan: Option<String> = None;
        let mut consecutive_continues = 0usize;

        for index in 1..=self.step_budget {
            let planner_slots: Slots<'_> = BTreeMap::from([
                ("icl_examples", self.prompts.icl_examples(Role::Planner).to_string()),
                ("query", instruction.to_string()),
                ("scratchpad", planner_scratch.clone()),
            ]);
            let completion = match self.complete(Role::Planner, &planner_slots).await {
                Ok(c) => c,
                Err(e) => {
                    session.failure = Some(transport_failure(e));
                    return session;
                }
            };
            let signal = match parse_planner_output(&completion) {
                Ok(s) => s,
                Err(e) => {
                    session.failure = Some(SessionFailure {
                        kind: FailureKind::UnparseablePlanner,
                        detail: e.to_string(),
                        attempted_routes: Vec::new(),
                    });
                    return session;
                }
            };

            let (control, nl_plan) = match signal {
                ControlSignal::End(answer) => {
                    session.steps.push(StepRecord {
                        index,
                        nl_plan: completion.trim().to_string(),
                        control: ControlKind::End,
                        api_plan: None,
                        execution_result: None,
                        calls: Vec::new(),
                        parse_outcomes: Vec::new(),
                        attempted_unmatched: Vec::new(),
                    });
                    session.status = SessionStatus::Finished;
                    session.final_answer = Some(answer);
                    return session;
                }
                ControlSignal::Continue(text) => {
                    consecutive_continues += 1;
                    if consecutive_continues > MAX_CONSECUTIVE_CONTINUES {
                        session.failure = Some(SessionFailure {
                            kind: FailureKind::PlannerStalled,
                            detail: format!(
                                "planner issued {consecutive_continues} consecutive Continue steps"
                            ),
                            attempted_routes: Vec::new(),
                        });
                        return session;
                    }
                    let text = if text.is_empty() {
                        match &prev_nl_plan {
                            Some(p) => p.clone(),
                            None => {
                                session.failure = Some(SessionFailure {
                                    kind: FailureKind::UnparseablePlanner,
                                    detail: "Continue issued before any plan step".into(),
                                    attempted_routes: Vec::new(),
                                });
                                return session;
                            }
                        }
                    } else {
                        text
                    };
                    match chain.as_mut() {
                        Some(c) => c.extend(&text),
                        None => {
                            session.failure = Some(SessionFailure {
                                kind: FailureKind::UnparseablePlanner,
                                detail: "Continue issued before any plan step".into(),
                                attempted_routes: Vec::new(),
                            });
                            return session;
                        }
                    }
                    (ControlKind::Continue, text)
                }
                ControlSignal::Proceed(text) => {
                    consecutive_continues = 0;
                    chain = Some(SelectorChain::start(&text));
                    (ControlKind::Proceed, text)
                }
            };

            let background = if results.is_empty() {
                "No background information.".to_string()
            } else {
                results.join("\n")
            };
            let active = chain.as_mut().expect("chain started for every step");
            let api_plan = match self.select(&digest, active, &background).await {
                Ok(Selection::Plan(p)) => p,
                Ok(Selection::NoValidEndpoint { detail, attempted }) => {
                    session.failure = Some(SessionFailure {
                        kind: FailureKind::NoValidEndpointInPlan,
                        detail,
                        attempted_routes: attempted,
                    });
                    return session;
                }
                Err(e) => {
                    session.failure = Some(transport_failure(e));
                    return session;
                }
            };

            let executor = Executor {
                catalog: &self.catalog,
                gateway: &self.gateway,
                http: &self.http,
                prompts: &self.prompts,
            };
            let execution = match executor.execute_plan(&api_plan, &background).await {
                Ok(x) => x,
                Err(e) => {
                    session.failure = Some(execution_failure(e));
                    return session;
                }
            };

            active.last = Some((api_plan.clone(), execution.summary.clone()));
            let rendered = match control {
                ControlKind::Continue => format!("Continue. {nl_plan}"),
                _ => nl_plan.clone(),
            };
            planner_scratch.push_str(&format!(
                " {rendered}\nAPI response: {}\nPlan step {}:",
                execution.summary,
                index + 1
            ));
            results.push(execution.summary.clone());
            session.calls_made.extend(execution.calls.iter().cloned());
            session.steps.push(StepRecord {
                index,
                nl_plan: nl_plan.clone(),
                control,
                api_plan: Some(api_plan),
                execution_result: Some(execution.summary),
                calls: execution.calls,
                parse_outcomes: execution.parse_outcomes,
                attempted_unmatched: execution.attempted_unmatched,
            });
            prev_nl_plan = Some(nl_plan);
        }

        session.failure = Some(SessionFailure {
            kind: FailureKind::StepBudgetExhausted,
            detail: format!("no final answer after {} plan steps", self.step_budget),
            attempted_routes: Vec::new(),
        });
        session
    }

    /// One selection with a single automatic retry when the plan names no
    /// documented endpoint.
    async fn select(
        &self,
        digest: &str,
        chain: &mut SelectorChain,
        background: &str,
    ) -> Result<Selection, GatewayError> {
        let mut attempted_all: Vec<(Method, String)> = Vec::new();
        for attempt in 0..2 {
            let slots: Slots<'_> = BTreeMap::from([
                ("endpoints", digest.to_string()),
                ("icl_examples", self.prompts.icl_examples(Role::Selector).to_string()),
                ("background", background.to_string()),
                ("plan", chain.origin_plan.clone()),
                ("scratchpad", chain.scratchpad.clone()),
            ]);
            let completion = self.complete(Role::Selector, &slots).await?;
            let api_plan = completion.trim().to_string();
            let (valid, attempted) = self.plan_names_known_endpoint(&api_plan);
            if valid {
                return Ok(Selection::Plan(api_plan));
            }
            for pair in attempted {
                if !attempted_all.contains(&pair) {
                    attempted_all.push(pair);
                }
            }
            if attempt == 0 {
                chain.scratchpad.push_str(&format!(
                    " {api_plan}\nAPI response: Error: that plan does not name any endpoint \
                     from the list above. Pick an endpoint from the list, or answer \
                     \"{NO_CALL_MARKER}\".\nAPI calling {}:",
                    chain.call_no
                ));
            }
        }
        Ok(Selection::NoValidEndpoint {
            detail: "selector twice produced a plan naming no documented endpoint".into(),
            attempted: attempted_all,
        })
    }

    fn plan_names_known_endpoint(&self, plan: &str) -> (bool, Vec<(Method, String)>) {
        if plan.contains(NO_CALL_MARKER) {
            return (true, Vec::new());
        }
        let mentions = extract_route_mentions(plan);
        let mut attempted = Vec::new();
        let mut any = false;
        for (method, path) in mentions {
            if self.catalog.resolve_mention(method, &path).is_some() {
                any = true;
            } else {
                attempted.push((method, path));
            }
        }
        (any, attempted)
    }

    async fn complete(&self, role: Role, slots: &Slots<'_>) -> Result<String, GatewayError> {
        let template = self.prompts.template_for(role);
        let prompt = render_prompt(template, slots)?;
        self.gateway
            .complete(CompletionRequest::new(
                role,
                prompt,
                template.stop_sequences.clone(),
            ))
            .await
    }
}

fn transport_failure(e: GatewayError) -> SessionFailure {
    SessionFailure {
        kind: FailureKind::ExecutionError,
        detail: e.to_string(),
        attempted_routes: Vec::new(),
    }
}

fn execution_failure(e: ExecutorError) -> SessionFailure {
    let attempted_routes = match &e {
        ExecutorError::UnmatchableCall { method, path } => vec![(*method, path.clone())],
        _ => Vec::new(),
    };
    SessionFailure {
        kind: FailureKind::ExecutionError,
        detail: e.to_string(),
        attempted_routes,
    }
}
