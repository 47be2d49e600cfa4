//! Benchmark dataset files: one JSON item per line.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Oracle;
use crate::agent::{FailureKind, SessionStatus};
use crate::catalog::ApiCatalog;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset line {line}: {detail}")]
    DatasetFormat { line: usize, detail: String },
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
}

/// One benchmark task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchItem {
    pub id: String,
    pub instruction: String,
    /// Route templates a correct solution must call, in order
    /// (e.g. `"GET /person/{person_id}/movie_credits"`).
    pub gold_path: Vec<String>,
    #[serde(default)]
    pub oracle: Option<Oracle>,
    /// Scripted model completions for offline runs, relative to the dataset
    /// file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_script: Option<String>,
    /// Recorded HTTP traffic for offline runs, relative to the dataset file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cassette: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

/// What a regression item is required to do; checked by `check_expectation`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Expectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<SessionStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer_contains: Option<Vec<String>>,
    /// Exact normalized call sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calls: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_kind: Option<FailureKind>,
    /// Routes that must show up as unmatchable-call diagnostics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unmatched_contains: Option<Vec<String>>,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<BenchItem>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: BenchItem =
            serde_json::from_str(line).map_err(|e| EvalError::DatasetFormat {
                line: i + 1,
                detail: e.to_string(),
            })?;
        items.push(item);
    }
    Ok(items)
}

/// Problems that make a dataset unusable against a catalog: duplicate ids,
/// gold entries naming nothing documented, broken oracle regexes.
pub fn validate_dataset(catalog: &ApiCatalog, items: &[BenchItem]) -> Vec<String> {
    let mut problems = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for item in items {
        if !seen.insert(item.id.as_str()) {
            problems.push(format!("duplicate item id: {}", item.id));
        }
        if item.gold_path.is_empty() {
            problems.push(format!("{}: empty gold path", item.id));
        }
        for entry in &item.gold_path {
            if parse_gold_entry(catalog, entry).is_none() {
                problems.push(format!(
                    "{}: gold entry names no documented endpoint: {entry}",
                    item.id
                ));
            }
        }
        if let Some(Oracle::Regex { regex }) = &item.oracle {
            if regex::Regex::new(regex).is_err() {
                problems.push(format!("{}: invalid oracle regex: {regex}", item.id));
            }
        }
    }
    problems
}

/// Resolves one gold entry (`"GET /x/{y}"`) to its documented route label.
pub(super) fn parse_gold_entry(catalog: &ApiCatalog, entry: &str) -> Option<String> {
    let (method, path) = entry.trim().split_once(' ')?;
    let method = method.parse().ok()?;
    let endpoint = catalog.resolve_mention(method, path.trim())?;
    Some(endpoint.label())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n: usize,
    /// Items per gold-path length.
    pub histogram: BTreeMap<usize, usize>,
    pub mean_gold_length: f64,
}

pub fn dataset_stats(items: &[BenchItem]) -> DatasetStats {
    let mut histogram = BTreeMap::new();
    for item in items {
        *histogram.entry(item.gold_path.len()).or_insert(0) += 1;
    }
    let mean_gold_length = if items.is_empty() {
        0.0
    } else {
        items.iter().map(|i| i.gold_path.len()).sum::<usize>() as f64 / items.len() as f64
    };
    DatasetStats {
        n: items.len(),
        histogram,
        mean_gold_length,
    }
}
