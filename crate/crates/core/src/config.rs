//! Run configuration: one serializable description of a session setup
//! (catalog, model backend, HTTP mode, prompts) and the wiring that turns
//! it into an engine.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{SessionEngine, DEFAULT_STEP_BUDGET};
use crate::catalog::{load_catalog, CatalogError};
use crate::gateway::{
    load_replay, Gateway, GatewayError, LiveBackend, LiveConfig, PromptSet, ReplayBackend,
};
use crate::http::{AuthHeader, Cassette, HttpEngine, HttpError, HttpMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid run config: {detail}")]
    Invalid { detail: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

/// Which completion backend serves the four model roles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    /// Scripted completions from a file; fully offline.
    Replay { script: PathBuf },
    /// A real completion endpoint.
    Live {
        #[serde(flatten)]
        config: LiveConfig,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HttpConfig {
    #[serde(default)]
    pub mode: Option<HttpMode>,
    /// Recorded traffic to replay, or the file to record into.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cassette: Option<PathBuf>,
    /// Refuse any request that leaves the local machine.
    #[serde(default)]
    pub loopback_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth: Option<AuthHeader>,
}

/// Everything needed to run sessions: deserializable from a JSON file, and
/// assembled piecemeal by CLI flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Path to the OpenAPI document describing the service.
    pub catalog: PathBuf,
    /// Overrides the document's server URL (points calls at a local mock).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    pub backend: BackendConfig,
    #[serde(default)]
    pub http: HttpConfig,
    #[serde(default = "default_budget")]
    pub step_budget: usize,
    /// Directory of prompt templates overriding the built-in set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompts_dir: Option<PathBuf>,
    /// Zero out timestamps so repeated runs produce identical bytes.
    #[serde(default)]
    pub frozen_clock: bool,
    /// Synthetic distractor endpoints merged into the catalog before the
    /// run, for selector-robustness experiments.
    #[serde(default)]
    pub noise_endpoints: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_window: Option<usize>,
    /// Where to write the prompt/completion transcript.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<PathBuf>,
}

fn default_budget() -> usize {
    DEFAULT_STEP_BUDGET
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(&path)?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError::Invalid {
                detail: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    /// The effective HTTP mode: explicit setting, else replay alongside a
    /// replay backend, else live.
    pub fn http_mode(&self) -> HttpMode {
        self.http.mode.unwrap_or(match self.backend {
            BackendConfig::Replay { .. } => HttpMode::Replay,
            BackendConfig::Live { .. } => HttpMode::Live,
        })
    }

    /// A scripted run must stay off the network: its HTTP side must replay
    /// a cassette or be pinned to loopback.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if matches!(self.backend, BackendConfig::Replay { .. })
            && self.http_mode() != HttpMode::Replay
            && !self.http.loopback_only
        {
            return Err(ConfigError::Invalid {
                detail: "a replay backend requires http mode \"replay\" or loopback_only=true"
                    .into(),
            });
        }
        if self.http_mode() == HttpMode::Replay && self.http.cassette.is_none() {
            return Err(ConfigError::Invalid {
                detail: "http mode \"replay\" requires a cassette".into(),
            });
        }
        if self.http_mode() == HttpMode::Record && self.http.cassette.is_none() {
            return Err(ConfigError::Invalid {
                detail: "http mode \"record\" requires a cassette path to write".into(),
            });
        }
        Ok(())
    }

    /// Re-anchors every relative path against `base` (e.g. the directory of
    /// the dataset or config file that named them).
    pub fn resolved_against(mut self, base: &Path) -> Self {
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        anchor(&mut self.catalog);
        if let BackendConfig::Replay { script } = &mut self.backend {
            anchor(script);
        }
        if let Some(cassette) = &mut self.http.cassette {
            anchor(cassette);
        }
        if let Some(dir) = &mut self.prompts_dir {
            anchor(dir);
        }
        self
    }

    /// Swaps in per-item replay files; used by the benchmark runner.
    pub fn with_item_files(mut self, script: Option<PathBuf>, cassette: Option<PathBuf>) -> Self {
        if let (BackendConfig::Replay { script: s }, Some(new)) = (&mut self.backend, script) {
            *s = new;
        }
        if let Some(new) = cassette {
            self.http.cassette = Some(new);
        }
        self
    }
}

/// Builds a ready-to-run engine from a validated config.
pub fn build_engine(config: &RunConfig) -> Result<SessionEngine, ConfigError> {
    config.validate()?;
    let mut catalog = load_catalog(&config.catalog)?;
    if let Some(base_url) = &config.base_url {
        catalog = catalog.with_base_url(base_url);
    }
    if config.noise_endpoints > 0 {
        catalog = catalog.with_noise_endpoints(config.noise_endpoints);
    }

    let prompts = match &config.prompts_dir {
        Some(dir) => PromptSet::from_dir(dir)?,
        None => PromptSet::builtin(),
    };
    prompts.validate()?;

    let mut gateway = match &config.backend {
        BackendConfig::Replay { script } => {
            let script = load_replay(script)?;
            Gateway::new(Arc::new(ReplayBackend::new(script)))
        }
        BackendConfig::Live { config: live } => {
            let mut live = live.clone();
            if let Some(window) = config.context_window {
                live.context_window = window;
            }
            let window = live.context_window;
            Gateway::new(Arc::new(LiveBackend::new(live)?)).with_context_window(window)
        }
    };
    if let Some(window) = config.context_window {
        gateway = gateway.with_context_window(window);
    }
    gateway = gateway.with_frozen_clock(config.frozen_clock);
    if let Some(path) = &config.transcript {
        gateway = gateway.with_transcript_file(path)?;
    }

    let http = match config.http_mode() {
        HttpMode::Replay => {
            let path = config.http.cassette.as_ref().expect("validated");
            HttpEngine::replaying(Cassette::load(path)?)
        }
        HttpMode::Record => {
            let path = config.http.cassette.as_ref().expect("validated");
            HttpEngine::recording(path, &catalog.name)?
        }
        HttpMode::Live => HttpEngine::live()?,
    };
    let http = http
        .with_auth(config.http.auth.clone())
        .with_loopback_only(config.http.loopback_only)
        .with_frozen_clock(config.frozen_clock);

    Ok(SessionEngine::new(catalog, gateway, http, prompts).with_step_budget(config.step_budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn replay_config() -> RunConfig {
        RunConfig {
            catalog: "cat.yaml".into(),
            base_url: None,
            backend: BackendConfig::Replay {
                script: "script.jsonl".into(),
            },
            http: HttpConfig {
                cassette: Some("cassette.jsonl".into()),
                ..Default::default()
            },
            step_budget: default_budget(),
            prompts_dir: None,
            frozen_clock: true,
            noise_endpoints: 0,
            context_window: None,
            transcript: None,
        }
    }

    #[test]
    fn replay_backend_defaults_to_replay_http() {
        let config = replay_config();
        assert_eq!(config.http_mode(), HttpMode::Replay);
        config.validate().unwrap();
    }

    #[test]
    fn scripted_runs_may_not_go_online_unpinned() {
        let mut config = replay_config();
        config.http.mode = Some(HttpMode::Live);
        assert!(config.validate().is_err());
        config.http.loopback_only = true;
        config.validate().unwrap();
    }

    #[test]
    fn replay_http_needs_a_cassette() {
        let mut config = replay_config();
        config.http.cassette = None;
        assert!(config.validate().is_err());
    }

    #[test]
    fn relative_paths_anchor_to_a_base() {
        let config = replay_config().resolved_against(Path::new("/data/bench"));
        assert_eq!(config.catalog, PathBuf::from("/data/bench/cat.yaml"));
        let BackendConfig::Replay { script } = &config.backend else {
            panic!()
        };
        assert_eq!(script, &PathBuf::from("/data/bench/script.jsonl"));
        assert_eq!(
            config.http.cassette.as_deref(),
            Some(Path::new("/data/bench/cassette.jsonl"))
        );
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = replay_config();
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.http_mode(), HttpMode::Replay);
        assert!(back.frozen_clock);
    }

    #[test]
    fn item_files_swap_into_a_template_config() {
        let config = replay_config()
            .with_item_files(Some("cases/a/script.jsonl".into()), Some("cases/a/cassette.jsonl".into()));
        let BackendConfig::Replay { script } = &config.backend else {
            panic!()
        };
        assert_eq!(script, &PathBuf::from("cases/a/script.jsonl"));
        assert_eq!(
            config.http.cassette.as_deref(),
            Some(Path::new("cases/a/cassette.jsonl"))
        );
    }
}
