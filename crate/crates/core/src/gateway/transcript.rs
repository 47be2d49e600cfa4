//! Transcript persistence. One JSON record per completion, appended in call
//! order; a saved transcript can be loaded back as a replay script.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::replay::{ReplayScript, ScriptEvent};
use super::{GatewayError, Role};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub seq: u64,
    pub role: Role,
    pub prompt_digest: String,
    pub prompt: String,
    pub completion: String,
    pub backend_id: String,
    pub wall_time_ms: u64,
}

/// Collects events in memory and optionally mirrors them to a JSONL file as
/// they happen, so a crash still leaves a usable prefix on disk.
pub struct TranscriptSink {
    events: Vec<TranscriptEvent>,
    file: Option<File>,
}

impl TranscriptSink {
    pub fn memory_only() -> Self {
        Self {
            events: Vec::new(),
            file: None,
        }
    }

    pub fn with_file(path: PathBuf) -> std::io::Result<Self> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        Ok(Self {
            events: Vec::new(),
            file: Some(File::create(path)?),
        })
    }

    pub fn append(&mut self, event: TranscriptEvent) -> std::io::Result<()> {
        if let Some(file) = &mut self.file {
            let line = serde_json::to_string(&event).expect("transcript event serializes");
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        self.events.push(event);
        Ok(())
    }

    pub fn events(&self) -> &[TranscriptEvent] {
        &self.events
    }
}

/// Loads a replay script from a JSONL file. Accepts both full transcripts
/// and hand-written scripts; only `role` and `completion` are required,
/// `prompt_contains` adds an optional assertion on the prompt.
pub fn load_replay(path: impl AsRef<std::path::Path>) -> Result<ReplayScript, GatewayError> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: ScriptEvent =
            serde_json::from_str(&line).map_err(|e| GatewayError::CorruptTranscript {
                line: idx + 1,
                detail: e.to_string(),
            })?;
        events.push(event);
    }
    Ok(ReplayScript::new(events))
}
