//! Uniform access to text-completion models: prompt rendering from role
//! templates, a live HTTP backend, and a deterministic replay backend, with
//! every exchange recorded as a transcript event.

mod backend;
mod replay;
mod template;
mod transcript;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backend::{CompletionBackend, LiveBackend, LiveConfig};
pub use replay::{ReplayBackend, ReplayScript, ScriptEvent};
pub use template::{render_prompt, PromptSet, RolePromptTemplate, Slots};
pub use transcript::{load_replay, TranscriptEvent, TranscriptSink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Planner,
    Selector,
    Caller,
    Parser,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Planner => "planner",
            Role::Selector => "selector",
            Role::Caller => "caller",
            Role::Parser => "parser",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("template for {role} is missing slot '{{{name}}}'")]
    MissingSlot { role: Role, name: String },
    #[error("unrecognized placeholder near {snippet:?}; write literal braces as '{{{{' and '}}}}'")]
    UnknownPlaceholder { snippet: String },
    #[error("malformed prompt template: {detail}")]
    MalformedTemplate { detail: String },
    #[error("completion backend unavailable: {detail}")]
    BackendUnavailable { detail: String },
    #[error("prompt would overflow the context window: ~{estimated} tokens > {window}")]
    ContextOverflow { estimated: usize, window: usize },
    #[error("replay mismatch at event {seq}: {detail}")]
    ReplayMismatch { seq: u64, detail: String },
    #[error("corrupt transcript at line {line}: {detail}")]
    CorruptTranscript { line: usize, detail: String },
    #[error("cannot read transcript: {0}")]
    Io(#[from] std::io::Error),
}

/// Decode request passed to a backend. Stop sequences are also enforced
/// locally: the returned completion never contains one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub role: Role,
    pub prompt: String,
    #[serde(default)]
    pub stop: Vec<String>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    #[serde(default)]
    pub temperature: f32,
}

fn default_max_tokens() -> usize {
    512
}

impl CompletionRequest {
    pub fn new(role: Role, prompt: impl Into<String>, stop: Vec<String>) -> Self {
        Self {
            role,
            prompt: prompt.into(),
            stop,
            max_tokens: default_max_tokens(),
            temperature: 0.0,
        }
    }
}

/// Crude but deterministic token estimate: one token per four characters,
/// rounded up. Used only to reject prompts before they reach a backend.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

pub const DEFAULT_CONTEXT_WINDOW: usize = 8192;

/// Front door for all model calls. Owns the backend, the context-window
/// check, stop-sequence enforcement and transcript recording.
pub struct Gateway {
    backend: Arc<dyn CompletionBackend>,
    context_window: usize,
    frozen_clock: bool,
    seq: AtomicU64,
    sink: Mutex<TranscriptSink>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn CompletionBackend>) -> Self {
        Self {
            backend,
            context_window: DEFAULT_CONTEXT_WINDOW,
            frozen_clock: false,
            seq: AtomicU64::new(0),
            sink: Mutex::new(TranscriptSink::memory_only()),
        }
    }

    pub fn with_context_window(mut self, window: usize) -> Self {
        self.context_window = window;
        self
    }

    /// Zeroes recorded wall times so transcripts are byte-stable.
    pub fn with_frozen_clock(mut self, frozen: bool) -> Self {
        self.frozen_clock = frozen;
        self
    }

    /// Additionally appends every event to a JSONL file.
    pub fn with_transcript_file(self, path: impl Into<std::path::PathBuf>) -> std::io::Result<Self> {
        *self.sink.lock().unwrap() = TranscriptSink::with_file(path.into())?;
        Ok(self)
    }

    pub fn backend_id(&self) -> String {
        self.backend.id().to_string()
    }

    /// Events recorded so far, in call order.
    pub fn transcript(&self) -> Vec<TranscriptEvent> {
        self.sink.lock().unwrap().events().to_vec()
    }

    pub async fn complete(&self, req: CompletionRequest) -> Result<String, GatewayError> {
        let estimated = estimate_tokens(&req.prompt) + req.max_tokens;
        if estimated > self.context_window {
            return Err(GatewayError::ContextOverflow {
                estimated,
                window: self.context_window,
            });
        }
        let started = Instant::now();
        let mut completion = self.backend.complete(&req).await?;
        for stop in &req.stop {
            if let Some(idx) = completion.find(stop.as_str()) {
                completion.truncate(idx);
            }
        }
        let wall_time_ms = if self.frozen_clock {
            0
        } else {
            started.elapsed().as_millis() as u64
        };
        let event = TranscriptEvent {
            seq: self.seq.fetch_add(1, Ordering::SeqCst),
            role: req.role,
            prompt_digest: prompt_digest(&req.prompt),
            prompt: req.prompt,
            completion: completion.clone(),
            backend_id: self.backend.id().to_string(),
            wall_time_ms,
        };
        self.sink.lock().unwrap().append(event)?;
        Ok(completion)
    }
}

/// Hex SHA-256 of the prompt text, for cross-referencing transcripts
/// without shipping the full prompt around.
pub fn prompt_digest(prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    format!("sha256:{:x}", hasher.finalize())
}
