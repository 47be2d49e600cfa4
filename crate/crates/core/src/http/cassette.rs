//! Cassette persistence: one header line naming the cassette and its match
//! mode, then one JSON record per HTTP exchange, in completion order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::Method;

use super::HttpError;

/// Placeholder stored instead of any credential header value.
pub const REDACTED: &str = "<redacted>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedRequest {
    pub method: Method,
    /// Absolute URL without the query string; parameters live in `params`.
    pub url: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Value>,
    /// Names of sensitive headers that were sent; values are never stored.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub headers: BTreeMap<String, String>,
}

impl RecordedRequest {
    /// First field where two requests diverge, for mismatch messages.
    pub fn divergence(&self, other: &RecordedRequest) -> Option<String> {
        if self.method != other.method {
            return Some(format!("method: {} vs {}", self.method, other.method));
        }
        if self.url != other.url {
            return Some(format!("url: {} vs {}", self.url, other.url));
        }
        if self.params != other.params {
            return Some(format!("params: {:?} vs {:?}", self.params, other.params));
        }
        if self.body != other.body {
            return Some("request body differs".to_string());
        }
        None
    }

    pub fn matches(&self, other: &RecordedRequest) -> bool {
        self.divergence(other).is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpExchange {
    pub seq: u64,
    pub request: RecordedRequest,
    pub status: u16,
    #[serde(default)]
    pub media_type: String,
    #[serde(default)]
    pub response_body: String,
    #[serde(default)]
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Exchanges must be consumed in exactly the recorded order.
    #[default]
    StrictOrder,
    /// Any unused exchange with an equal request matches.
    ByRequest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CassetteHeader {
    name: String,
    #[serde(default)]
    match_mode: MatchMode,
}

#[derive(Debug, Clone)]
pub struct Cassette {
    pub name: String,
    pub match_mode: MatchMode,
    pub exchanges: Vec<HttpExchange>,
}

impl Cassette {
    pub fn new(name: &str, match_mode: MatchMode) -> Self {
        Self {
            name: name.to_string(),
            match_mode,
            exchanges: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HttpError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| HttpError::CassetteFormat {
            line: 0,
            detail: format!("{}: {e}", path.display()),
        })?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header: CassetteHeader = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(HttpError::CassetteFormat {
                    line: 0,
                    detail: "cassette file is empty".into(),
                });
            };
            let line = line.map_err(|e| HttpError::CassetteFormat {
                line: idx + 1,
                detail: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            break serde_json::from_str(&line).map_err(|e| HttpError::CassetteFormat {
                line: idx + 1,
                detail: format!("bad cassette header: {e}"),
            })?;
        };
        let mut exchanges = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| HttpError::CassetteFormat {
                line: idx + 1,
                detail: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let exchange: HttpExchange =
                serde_json::from_str(&line).map_err(|e| HttpError::CassetteFormat {
                    line: idx + 1,
                    detail: e.to_string(),
                })?;
            exchanges.push(exchange);
        }
        Ok(Self {
            name: header.name,
            match_mode: header.match_mode,
            exchanges,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HttpError> {
        let mut writer = CassetteWriter::create(path, &self.name, self.match_mode)?;
        for exchange in &self.exchanges {
            writer.append(exchange)?;
        }
        Ok(())
    }
}

/// Appends exchanges to disk as they complete, so an interrupted recording
/// still leaves a readable prefix.
pub struct CassetteWriter {
    file: File,
    path: PathBuf,
}

impl CassetteWriter {
    pub fn create(
        path: impl AsRef<Path>,
        name: &str,
        match_mode: MatchMode,
    ) -> Result<Self, HttpError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(HttpError::Io)?;
            }
        }
        let mut file = File::create(&path).map_err(HttpError::Io)?;
        let header = CassetteHeader {
            name: name.to_string(),
            match_mode,
        };
        writeln!(file, "{}", serde_json::to_string(&header).unwrap()).map_err(HttpError::Io)?;
        Ok(Self { file, path })
    }

    pub fn append(&mut self, exchange: &HttpExchange) -> Result<(), HttpError> {
        debug_assert!(
            !serde_json::to_string(exchange).unwrap().contains("Bearer "),
            "credential leaked into cassette {}",
            self.path.display()
        );
        writeln!(self.file, "{}", serde_json::to_string(exchange).unwrap())
            .map_err(HttpError::Io)?;
        self.file.flush().map_err(HttpError::Io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn exchange(seq: u64, url: &str) -> HttpExchange {
        HttpExchange {
            seq,
            request: RecordedRequest {
                method: Method::Get,
                url: url.to_string(),
                params: BTreeMap::from([("query".into(), "Sofia Coppola".into())]),
                body: None,
                headers: BTreeMap::from([("authorization".into(), REDACTED.into())]),
            },
            status: 200,
            media_type: "application/json".into(),
            response_body: json!({"ok": true}).to_string(),
            latency_ms: 12,
        }
    }

    #[test]
    fn cassette_round_trips_through_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut cassette = Cassette::new("case", MatchMode::StrictOrder);
        cassette.exchanges.push(exchange(0, "https://api.example.org/3/search/person"));
        cassette.exchanges.push(exchange(1, "https://api.example.org/3/person/1769"));
        cassette.save(&path).unwrap();

        let loaded = Cassette::load(&path).unwrap();
        assert_eq!(loaded.name, "case");
        assert_eq!(loaded.match_mode, MatchMode::StrictOrder);
        assert_eq!(loaded.exchanges, cassette.exchanges);

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains(REDACTED));
        assert!(!text.contains("Bearer"));
    }

    #[test]
    fn divergence_names_the_first_differing_field() {
        let a = exchange(0, "https://api.example.org/3/search/person").request;
        let mut b = a.clone();
        b.params.insert("query".into(), "Leonardo DiCaprio".into());
        let d = a.divergence(&b).unwrap();
        assert!(d.starts_with("params:"), "{d}");

        let mut c = a.clone();
        c.method = Method::Post;
        assert!(a.divergence(&c).unwrap().starts_with("method:"));
        assert!(a.divergence(&a.clone()).is_none());
    }

    #[test]
    fn corrupt_lines_are_rejected_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"name\":\"x\",\"match_mode\":\"strict_order\"}\nnot json\n")
            .unwrap();
        let err = Cassette::load(&path).unwrap_err();
        match err {
            HttpError::CassetteFormat { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
