//! Wire contract of the HTTP service: request and response bodies shared by
//! the server and its clients. Pure data, no transport.

use serde::{Deserialize, Serialize};

use crate::agent::Session;
use crate::config::RunConfig;
use crate::eval::{BenchItem, DatasetStats, MetricsReport};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogSummary {
    pub name: String,
    pub base_url: String,
    pub endpoints: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointSummary {
    pub method: String,
    pub route: String,
    pub description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogDetail {
    pub name: String,
    pub base_url: String,
    pub endpoints: Vec<EndpointSummary>,
}

/// Registers a catalog from an OpenAPI document carried inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterCatalogRequest {
    pub name: String,
    /// YAML or JSON; the parser decides by the leading character.
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDocsRequest {
    pub plan: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDocsResponse {
    pub docs: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchRequest {
    pub method: String,
    pub path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchResponse {
    pub matched: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bindings: Vec<(String, String)>,
}

/// Runs one instruction under the given configuration. Paths inside the
/// config are read by the server process and must be resolvable there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionRequest {
    pub instruction: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionResponse {
    pub session: Session,
    /// Real network dispatches the run performed; zero in replay mode.
    pub dispatch_total: u64,
    pub dispatch_non_loopback: u64,
}

/// Runs a benchmark. Items come from a dataset file on the server's disk or
/// inline; per-item replay files are resolved against the dataset's
/// directory (inline items must carry pre-resolved paths).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<std::path::PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<BenchItem>>,
    pub config: RunConfig,
    /// Only validate the dataset and report its composition.
    #[serde(default)]
    pub stats_only: bool,
    /// Check per-item expectations and report mismatches.
    #[serde(default)]
    pub check: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchResponse {
    pub stats: DatasetStats,
    /// Problems found by dataset validation; present even in full runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub validation_problems: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<MetricsReport>,
    /// One line per expectation mismatch, prefixed by the item id.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expectation_failures: Vec<String>,
}
