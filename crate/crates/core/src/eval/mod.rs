//! Benchmark evaluation: success judging, path correctness, and solution
//! length statistics over recorded sessions.

mod dataset;
mod runner;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use dataset::{
    dataset_stats, load_dataset, validate_dataset, BenchItem, DatasetStats, EvalError, Expectation,
};
pub use runner::{check_expectation, evaluate_run, run_benchmark, setup_failure_record};

/// Decides whether a final answer solved the task. Items without an oracle
/// cannot be judged mechanically and are excluded from the success-rate
/// denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Oracle {
    /// Every listed substring must appear in the answer.
    Substrings { substrings: Vec<String> },
    /// The answer must match the regex.
    Regex { regex: String },
    /// The trimmed answer must equal the text exactly.
    Exact { exact: String },
}

impl Oracle {
    /// `None` means the oracle itself is unusable (bad regex).
    pub fn judge(&self, answer: &str) -> Option<bool> {
        match self {
            Oracle::Substrings { substrings } => {
                Some(substrings.iter().all(|s| answer.contains(s.as_str())))
            }
            Oracle::Regex { regex } => {
                let re = regex::Regex::new(regex).ok()?;
                Some(re.is_match(answer))
            }
            Oracle::Exact { exact } => Some(answer.trim() == exact.trim()),
        }
    }
}

/// One evaluated session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub item_id: String,
    pub finished: bool,
    pub success: bool,
    /// Finished but no oracle to judge it; excluded from the success rate.
    pub needs_human: bool,
    pub path_correct: bool,
    pub l_real: usize,
    pub l_gold: usize,
    /// Calls the agent made, normalized to documented route templates.
    pub calls_made: Vec<String>,
    pub gold_path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Counts for one gold-path length bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketStats {
    pub n: usize,
    pub n_success: usize,
    pub n_path_correct: usize,
}

/// Aggregate metrics over one benchmark run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub n_success: usize,
    pub n_needs_human: usize,
    /// Successes over mechanically judged items; absent when nothing was
    /// judgeable.
    pub success_rate: Option<f64>,
    pub correct_path_rate: Option<f64>,
    /// Mean extra calls beyond the gold path, over successful runs only;
    /// absent when nothing succeeded.
    pub delta_solution_len: Option<f64>,
    pub gold_length_histogram: BTreeMap<usize, usize>,
    pub mean_gold_length: f64,
    pub per_gold_length: BTreeMap<usize, BucketStats>,
    pub records: Vec<RunRecord>,
}

impl MetricsReport {
    pub fn from_records(records: Vec<RunRecord>) -> Self {
        let n = records.len();
        let n_success = records.iter().filter(|r| r.success).count();
        let n_needs_human = records.iter().filter(|r| r.needs_human).count();
        let judged = n - n_needs_human;
        let success_rate = (judged > 0).then(|| n_success as f64 / judged as f64);
        let n_path_correct = records.iter().filter(|r| r.path_correct).count();
        let correct_path_rate = (n > 0).then(|| n_path_correct as f64 / n as f64);
        let delta_solution_len = delta_solution_len(&records);
        let mut gold_length_histogram = BTreeMap::new();
        let mut per_gold_length: BTreeMap<usize, BucketStats> = BTreeMap::new();
        for r in &records {
            *gold_length_histogram.entry(r.l_gold).or_insert(0) += 1;
            let bucket = per_gold_length.entry(r.l_gold).or_default();
            bucket.n += 1;
            bucket.n_success += r.success as usize;
            bucket.n_path_correct += r.path_correct as usize;
        }
        let mean_gold_length = if n > 0 {
            records.iter().map(|r| r.l_gold).sum::<usize>() as f64 / n as f64
        } else {
            0.0
        };
        MetricsReport {
            n,
            n_success,
            n_needs_human,
            success_rate,
            correct_path_rate,
            delta_solution_len,
            gold_length_histogram,
            mean_gold_length,
            per_gold_length,
            records,
        }
    }
}

/// Mean of `l_real - l_gold` over successful runs; `None` without successes,
/// so an all-failed run never reads as "optimal length".
pub fn delta_solution_len(records: &[RunRecord]) -> Option<f64> {
    let successes: Vec<&RunRecord> = records.iter().filter(|r| r.success).collect();
    if successes.is_empty() {
        return None;
    }
    let total: f64 = successes
        .iter()
        .map(|r| r.l_real as f64 - r.l_gold as f64)
        .sum();
    Some(total / successes.len() as f64)
}

/// True when `needle` appears in `haystack` in order, not necessarily
/// contiguously. An empty needle always matches.
pub fn is_subsequence<T: PartialEq>(needle: &[T], haystack: &[T]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|want| it.any(|have| have == want))
}
