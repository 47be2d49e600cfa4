//! Completion backends. The live backend speaks the common JSON completion
//! wire shapes (prompt-style and chat-style) against any compatible server.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CompletionRequest, GatewayError};

#[async_trait::async_trait]
pub trait CompletionBackend: Send + Sync {
    /// Stable identifier recorded with every transcript event.
    fn id(&self) -> &str;
    async fn complete(&self, req: &CompletionRequest) -> Result<String, GatewayError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiStyle {
    /// POST body carries `prompt`; the reply is `choices[0].text`.
    Prompt,
    /// POST body carries `messages`; the reply is `choices[0].message.content`.
    #[default]
    Chat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiveConfig {
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token; never the token itself.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default)]
    pub api_style: ApiStyle,
    #[serde(default = "default_window")]
    pub context_window: usize,
}

fn default_key_env() -> String {
    "LLM_API_KEY".to_string()
}

fn default_window() -> usize {
    super::DEFAULT_CONTEXT_WINDOW
}

pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::Client,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::Client::builder()
            .timeout(std::time::Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::BackendUnavailable {
                detail: format!("cannot build HTTP client: {e}"),
            })?;
        Ok(Self { config, client })
    }

    fn payload(&self, req: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        });
        if !req.stop.is_empty() {
            body["stop"] = json!(req.stop);
        }
        match self.config.api_style {
            ApiStyle::Prompt => body["prompt"] = json!(req.prompt),
            ApiStyle::Chat => {
                body["messages"] = json!([{"role": "user", "content": req.prompt}]);
            }
        }
        body
    }

    fn extract_text(&self, body: &Value) -> Option<String> {
        let choice = body.get("choices")?.get(0)?;
        match self.config.api_style {
            ApiStyle::Prompt => choice.get("text")?.as_str().map(str::to_string),
            ApiStyle::Chat => choice
                .get("message")?
                .get("content")?
                .as_str()
                .map(str::to_string),
        }
    }
}

#[async_trait::async_trait]
impl CompletionBackend for LiveBackend {
    fn id(&self) -> &str {
        &self.config.model
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<String, GatewayError> {
        let key = std::env::var(&self.config.api_key_env).map_err(|_| {
            GatewayError::BackendUnavailable {
                detail: format!("environment variable {} is not set", self.config.api_key_env),
            }
        })?;
        let response = self
            .client
            .post(&self.config.url)
            .bearer_auth(key)
            .json(&self.payload(req))
            .send()
            .await
            .map_err(|e| GatewayError::BackendUnavailable {
                detail: format!("request to {} failed: {e}", self.config.url),
            })?;
        let status = response.status();
        let body: Value = response
            .json()
            .await
            .map_err(|e| GatewayError::BackendUnavailable {
                detail: format!("non-JSON completion response: {e}"),
            })?;
        if !status.is_success() {
            return Err(GatewayError::BackendUnavailable {
                detail: format!("completion endpoint returned {status}: {body}"),
            });
        }
        self.extract_text(&body)
            .ok_or_else(|| GatewayError::BackendUnavailable {
                detail: format!("completion response has no choices: {body}"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Role;

    #[test]
    fn payload_matches_the_declared_style() {
        let req = CompletionRequest::new(Role::Planner, "hello", vec!["STOP".into()]);
        let prompt_backend = LiveBackend::new(LiveConfig {
            url: "http://127.0.0.1:1/v1/completions".into(),
            model: "m".into(),
            api_key_env: "X".into(),
            api_style: ApiStyle::Prompt,
            context_window: 4096,
        })
        .unwrap();
        let body = prompt_backend.payload(&req);
        assert_eq!(body["prompt"], "hello");
        assert_eq!(body["stop"][0], "STOP");
        assert!(body.get("messages").is_none());

        let chat_backend = LiveBackend::new(LiveConfig {
            url: "http://127.0.0.1:1/v1/chat/completions".into(),
            model: "m".into(),
            api_key_env: "X".into(),
            api_style: ApiStyle::Chat,
            context_window: 4096,
        })
        .unwrap();
        let body = chat_backend.payload(&req);
        assert_eq!(body["messages"][0]["content"], "hello");
        assert!(body.get("prompt").is_none());
    }

    #[test]
    fn extracts_text_for_both_wire_shapes() {
        let mk = |style| {
            LiveBackend::new(LiveConfig {
                url: "http://127.0.0.1:1".into(),
                model: "m".into(),
                api_key_env: "X".into(),
                api_style: style,
                context_window: 4096,
            })
            .unwrap()
        };
        let prompt_style = mk(ApiStyle::Prompt);
        let text = prompt_style
            .extract_text(&json!({"choices": [{"text": "out"}]}))
            .unwrap();
        assert_eq!(text, "out");
        let chat_style = mk(ApiStyle::Chat);
        let text = chat_style
            .extract_text(&json!({"choices": [{"message": {"content": "out"}}]}))
            .unwrap();
        assert_eq!(text, "out");
        assert!(chat_style.extract_text(&json!({"error": "x"})).is_none());
    }

    #[tokio::test]
    async fn missing_key_env_is_backend_unavailable() {
        let backend = LiveBackend::new(LiveConfig {
            url: "http://127.0.0.1:1".into(),
            model: "m".into(),
            api_key_env: "RESTPILOT_TEST_KEY_THAT_IS_NOT_SET".into(),
            api_style: ApiStyle::Chat,
            context_window: 4096,
        })
        .unwrap();
        let err = backend
            .complete(&CompletionRequest::new(Role::Planner, "x", vec![]))
            .await
            .unwrap_err();
        assert!(matches!(err, GatewayError::BackendUnavailable { .. }));
    }
}
