//! The HTTP engine behind the executor. Three modes: live (dispatch only),
//! record (dispatch and append to a cassette), replay (serve from a cassette
//! without ever opening a socket).

mod cassette;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;

use crate::catalog::Method;

pub use cassette::{
    Cassette, CassetteWriter, HttpExchange, MatchMode, RecordedRequest, REDACTED,
};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const MAX_REDIRECTS: usize = 5;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("request to {url} timed out")]
    Timeout { url: String },
    #[error("connection to {url} failed: {detail}")]
    ConnectionFailed { url: String, detail: String },
    #[error("redirect chain from {url} exceeded {MAX_REDIRECTS} hops")]
    RedirectLoop { url: String },
    #[error("cassette miss: {detail}")]
    CassetteMiss { detail: String },
    #[error("cassette format error at line {line}: {detail}")]
    CassetteFormat { line: usize, detail: String },
    #[error("credential variable {var} is not set in the environment")]
    MissingCredential { var: String },
    #[error("request to non-loopback host {host} blocked in offline mode")]
    NonLoopbackBlocked { host: String },
    #[error("malformed response body: {detail}")]
    MalformedBody { detail: String },
    #[error(transparent)]
    Io(std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HttpMode {
    Live,
    Record,
    Replay,
}

/// Credential header attached to live requests. The value template may
/// reference environment variables as `${VAR}`; cassettes only ever see the
/// redaction placeholder.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AuthHeader {
    pub name: String,
    pub value_template: String,
}

impl AuthHeader {
    fn resolve(&self) -> Result<String, HttpError> {
        let re = regex::Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap();
        let mut missing = None;
        let out = re.replace_all(&self.value_template, |caps: &regex::Captures<'_>| {
            match std::env::var(&caps[1]) {
                Ok(v) => v,
                Err(_) => {
                    missing.get_or_insert(caps[1].to_string());
                    String::new()
                }
            }
        });
        match missing {
            Some(var) => Err(HttpError::MissingCredential { var }),
            None => Ok(out.into_owned()),
        }
    }
}

/// A fully resolved outbound request, ready to dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct OutboundRequest {
    pub method: Method,
    pub url: String,
    pub params: BTreeMap<String, String>,
    pub body: Option<Value>,
}

impl OutboundRequest {
    fn recorded(&self, auth: Option<&AuthHeader>) -> RecordedRequest {
        let mut headers = BTreeMap::new();
        if let Some(auth) = auth {
            headers.insert(auth.name.to_ascii_lowercase(), REDACTED.to_string());
        }
        RecordedRequest {
            method: self.method,
            url: self.url.clone(),
            params: self.params.clone(),
            body: self.body.clone(),
            headers,
        }
    }
}

/// Counts real network dispatches per host. Replay mode never increments
/// it, which is how offline runs prove they stayed offline.
#[derive(Debug, Default)]
pub struct DispatchCounter {
    total: AtomicU64,
    by_host: Mutex<BTreeMap<String, u64>>,
}

impl DispatchCounter {
    fn record(&self, host: &str) {
        self.total.fetch_add(1, Ordering::SeqCst);
        *self
            .by_host
            .lock()
            .unwrap()
            .entry(host.to_string())
            .or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.total.load(Ordering::SeqCst)
    }

    pub fn by_host(&self) -> BTreeMap<String, u64> {
        self.by_host.lock().unwrap().clone()
    }

    /// Dispatches that left the machine.
    pub fn non_loopback_total(&self) -> u64 {
        self.by_host()
            .iter()
            .filter(|(host, _)| !is_loopback(host))
            .map(|(_, n)| n)
            .sum()
    }
}

pub fn is_loopback(host: &str) -> bool {
    host == "localhost" || host.starts_with("127.") || host == "::1" || host == "[::1]"
}

enum EngineState {
    /// Live and record share a client; record also owns a writer.
    Online {
        client: reqwest::Client,
        recorder: Option<Mutex<CassetteWriter>>,
    },
    /// Replay holds the cassette and no client at all.
    Replay(Mutex<ReplayState>),
}

struct ReplayState {
    exchanges: Vec<HttpExchange>,
    used: Vec<bool>,
    cursor: usize,
    match_mode: MatchMode,
    name: String,
}

pub struct HttpEngine {
    mode: HttpMode,
    state: EngineState,
    counter: Arc<DispatchCounter>,
    auth: Option<AuthHeader>,
    loopback_only: bool,
    frozen_clock: bool,
    seq: AtomicU64,
}

impl HttpEngine {
    pub fn live() -> Result<Self, HttpError> {
        Self::online(HttpMode::Live, None)
    }

    pub fn recording(
        path: impl AsRef<std::path::Path>,
        name: &str,
    ) -> Result<Self, HttpError> {
        let writer = CassetteWriter::create(path, name, MatchMode::StrictOrder)?;
        Self::online(HttpMode::Record, Some(Mutex::new(writer)))
    }

    fn online(mode: HttpMode, recorder: Option<Mutex<CassetteWriter>>) -> Result<Self, HttpError> {
        let client = reqwest::Client::builder()
            .timeout(DEFAULT_TIMEOUT)
            .redirect(reqwest::redirect::Policy::limited(MAX_REDIRECTS))
            .build()
            .map_err(|e| HttpError::ConnectionFailed {
                url: String::new(),
                detail: format!("cannot build HTTP client: {e}"),
            })?;
        Ok(Self {
            mode,
            state: EngineState::Online { client, recorder },
            counter: Arc::new(DispatchCounter::default()),
            auth: None,
            loopback_only: false,
            frozen_clock: false,
            seq: AtomicU64::new(0),
        })
    }

    pub fn replaying(cassette: Cassette) -> Self {
        let used = vec![false; cassette.exchanges.len()];
        Self {
            mode: HttpMode::Replay,
            state: EngineState::Replay(Mutex::new(ReplayState {
                used,
                cursor: 0,
                match_mode: cassette.match_mode,
                name: cassette.name,
                exchanges: cassette.exchanges,
            })),
            counter: Arc::new(DispatchCounter::default()),
            auth: None,
            loopback_only: false,
            frozen_clock: false,
            seq: AtomicU64::new(0),
        }
    }

    pub fn with_auth(mut self, auth: Option<AuthHeader>) -> Self {
        self.auth = auth;
        self
    }

    /// Refuses to dispatch beyond loopback; used when the model side runs
    /// from a replay script and real traffic would be nondeterministic.
    pub fn with_loopback_only(mut self, yes: bool) -> Self {
        self.loopback_only = yes;
        self
    }

    pub fn with_frozen_clock(mut self, yes: bool) -> Self {
        self.frozen_clock = yes;
        self
    }

    pub fn mode(&self) -> HttpMode {
        self.mode
    }

    pub fn counter(&self) -> Arc<DispatchCounter> {
        Arc::clone(&self.counter)
    }

    /// Exchanges not yet served; only meaningful in replay mode.
    pub fn replay_remaining(&self) -> usize {
        match &self.state {
            EngineState::Replay(state) => {
                let state = state.lock().unwrap();
                state.used.iter().filter(|u| !**u).count()
            }
            _ => 0,
        }
    }

    pub async fn dispatch(&self, request: &OutboundRequest) -> Result<HttpExchange, HttpError> {
        match &self.state {
            EngineState::Replay(state) => self.replay_one(state, request),
            EngineState::Online { client, recorder } => {
                let exchange = self.dispatch_live(client, request).await?;
                if let Some(recorder) = recorder {
                    recorder.lock().unwrap().append(&exchange)?;
                }
                Ok(exchange)
            }
        }
    }

    fn replay_one(
        &self,
        state: &Mutex<ReplayState>,
        request: &OutboundRequest,
    ) -> Result<HttpExchange, HttpError> {
        let mut state = state.lock().unwrap();
        let wanted = request.recorded(self.auth.as_ref());
        match state.match_mode {
            MatchMode::StrictOrder => {
                let cursor = state.cursor;
                let Some(recorded) = state.exchanges.get(cursor) else {
                    return Err(HttpError::CassetteMiss {
                        detail: format!(
                            "cassette '{}' is exhausted but {} {} was requested",
                            state.name, request.method, request.url
                        ),
                    });
                };
                if let Some(divergence) = divergence_ignoring_headers(&recorded.request, &wanted) {
                    return Err(HttpError::CassetteMiss {
                        detail: format!(
                            "exchange {} of cassette '{}' diverges on {divergence}",
                            cursor, state.name
                        ),
                    });
                }
                state.cursor += 1;
                state.used[cursor] = true;
                Ok(state.exchanges[cursor].clone())
            }
            MatchMode::ByRequest => {
                let found = state.exchanges.iter().enumerate().position(|(i, e)| {
                    !state.used[i] && divergence_ignoring_headers(&e.request, &wanted).is_none()
                });
                let Some(idx) = found else {
                    return Err(HttpError::CassetteMiss {
                        detail: format!(
                            "cassette '{}' has no unused exchange for {} {} params {:?}",
                            state.name, request.method, request.url, request.params
                        ),
                    });
                };
                state.used[idx] = true;
                Ok(state.exchanges[idx].clone())
            }
        }
    }

    async fn dispatch_live(
        &self,
        client: &reqwest::Client,
        request: &OutboundRequest,
    ) -> Result<HttpExchange, HttpError> {
        let parsed = url::Url::parse(&request.url).map_err(|e| HttpError::ConnectionFailed {
            url: request.url.clone(),
            detail: format!("invalid URL: {e}"),
        })?;
        let host = parsed.host_str().unwrap_or("").to_string();
        if self.loopback_only && !is_loopback(&host) {
            return Err(HttpError::NonLoopbackBlocked { host });
        }

        let method = reqwest::Method::from_bytes(request.method.as_str().as_bytes())
            .expect("methods are valid");
        let mut builder = client.request(method, parsed);
        if !request.params.is_empty() {
            builder = builder.query(&request.params);
        }
        if let Some(body) = &request.body {
            builder = builder.json(body);
        }
        if let Some(auth) = &self.auth {
            builder = builder.header(auth.name.as_str(), auth.resolve()?);
        }

        self.counter.record(&host);
        let started = Instant::now();
        let response = builder.send().await.map_err(|e| {
            if e.is_timeout() {
                HttpError::Timeout {
                    url: request.url.clone(),
                }
            } else if e.is_redirect() {
                HttpError::RedirectLoop {
                    url: request.url.clone(),
                }
            } else {
                HttpError::ConnectionFailed {
                    url: request.url.clone(),
                    detail: e.to_string(),
                }
            }
        })?;
        let status = response.status().as_u16();
        let media_type = response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .split(';')
            .next()
            .unwrap_or("")
            .trim()
            .to_string();
        let response_body = response.text().await.map_err(|e| HttpError::ConnectionFailed {
            url: request.url.clone(),
            detail: format!("while reading body: {e}"),
        })?;
        let latency_ms = if self.frozen_clock {
            0
        } else {
            started.elapsed().as_millis() as u64
        };
        Ok(HttpExchange {
            seq: self.seq.fetch_add(1, Ordering::SeqCst),
            request: request.recorded(self.auth.as_ref()),
            status,
            media_type,
            response_body,
            latency_ms,
        })
    }
}

/// Request equality for replay matching; recorded header values are
/// redaction placeholders, so headers are excluded from the comparison.
fn divergence_ignoring_headers(a: &RecordedRequest, b: &RecordedRequest) -> Option<String> {
    let mut a = a.clone();
    let mut b = b.clone();
    a.headers.clear();
    b.headers.clear();
    a.divergence(&b)
}

/// Interprets an exchange body as JSON. Bodyless success responses become
/// an empty object; non-JSON text is wrapped so the pipeline stays typed.
pub fn parse_body(exchange: &HttpExchange) -> Result<Value, HttpError> {
    let trimmed = exchange.response_body.trim();
    if trimmed.is_empty() {
        return Ok(json!({}));
    }
    let is_json = exchange.media_type.contains("json")
        || (exchange.media_type.is_empty() && (trimmed.starts_with('{') || trimmed.starts_with('[')));
    if is_json {
        serde_json::from_str(trimmed).map_err(|e| HttpError::MalformedBody {
            detail: format!("{} body is not valid JSON: {e}", exchange.media_type),
        })
    } else {
        Ok(json!({ "raw_text": exchange.response_body }))
    }
}
