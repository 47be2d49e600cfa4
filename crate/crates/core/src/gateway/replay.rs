//! Deterministic replay backend: completions come from a prerecorded script
//! in strict order. Any divergence between the session and the script is a
//! hard error naming what diverged.

use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{CompletionBackend, CompletionRequest, GatewayError, Role};

/// One scripted completion. `prompt_contains` is an optional guard asserting
/// that the live prompt really carried the expected context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub role: Role,
    pub completion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_contains: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ReplayScript {
    events: VecDeque<ScriptEvent>,
}

impl ReplayScript {
    pub fn new(events: Vec<ScriptEvent>) -> Self {
        Self {
            events: events.into(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.events.len()
    }
}

pub struct ReplayBackend {
    state: Mutex<ReplayState>,
}

struct ReplayState {
    events: VecDeque<ScriptEvent>,
    consumed: u64,
}

impl ReplayBackend {
    pub fn new(script: ReplayScript) -> Self {
        Self {
            state: Mutex::new(ReplayState {
                events: script.events,
                consumed: 0,
            }),
        }
    }

    /// Events not yet consumed; zero after a fully replayed session.
    pub fn remaining(&self) -> usize {
        self.state.lock().unwrap().events.len()
    }
}

#[async_trait::async_trait]
impl CompletionBackend for ReplayBackend {
    fn id(&self) -> &str {
        "replay"
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<String, GatewayError> {
        let mut state = self.state.lock().unwrap();
        let seq = state.consumed;
        let Some(event) = state.events.pop_front() else {
            return Err(GatewayError::ReplayMismatch {
                seq,
                detail: format!("script exhausted, but {} asked for a completion", req.role),
            });
        };
        if event.role != req.role {
            return Err(GatewayError::ReplayMismatch {
                seq,
                detail: format!("script expects a {} turn, session asked as {}", event.role, req.role),
            });
        }
        if let Some(needle) = &event.prompt_contains {
            if !req.prompt.contains(needle.as_str()) {
                return Err(GatewayError::ReplayMismatch {
                    seq,
                    detail: format!("prompt does not contain expected text {needle:?}"),
                });
            }
        }
        state.consumed += 1;
        Ok(event.completion)
    }
}
