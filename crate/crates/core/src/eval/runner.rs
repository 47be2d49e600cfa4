//! Runs benchmark items through sessions and scores the results.

use super::dataset::parse_gold_entry;
use super::{is_subsequence, BenchItem, Expectation, MetricsReport, RunRecord};
use crate::agent::{Session, SessionEngine, SessionStatus};
use crate::catalog::ApiCatalog;

/// Scores one finished session against its benchmark item.
pub fn evaluate_run(catalog: &ApiCatalog, item: &BenchItem, session: &Session) -> RunRecord {
    let mut diagnostics = Vec::new();

    let mut calls_made = Vec::with_capacity(session.calls_made.len());
    for call in &session.calls_made {
        match catalog.match_route(call.method, &call.path) {
            Ok(Some(m)) => calls_made.push(m.endpoint.label()),
            _ => {
                let raw = format!("{} {}", call.method, call.path);
                diagnostics.push(format!("unmatchable call: {raw}"));
                calls_made.push(raw);
            }
        }
    }
    for (method, path) in session.attempted_unmatched() {
        diagnostics.push(format!("unmatchable call: {method} {path}"));
    }

    let gold_path: Vec<String> = item
        .gold_path
        .iter()
        .map(|entry| {
            parse_gold_entry(catalog, entry).unwrap_or_else(|| {
                diagnostics.push(format!("gold entry names no documented endpoint: {entry}"));
                entry.trim().to_string()
            })
        })
        .collect();

    let path_correct = is_subsequence(&gold_path, &calls_made);
    let finished = session.status == SessionStatus::Finished;
    let (success, needs_human) = match (&item.oracle, finished) {
        (_, false) => (false, false),
        (None, true) => (false, true),
        (Some(oracle), true) => {
            let answer = session.final_answer.as_deref().unwrap_or("");
            match oracle.judge(answer) {
                Some(verdict) => (verdict, false),
                None => {
                    diagnostics.push("oracle is unusable (bad regex)".to_string());
                    (false, true)
                }
            }
        }
    };
    if let Some(failure) = &session.failure {
        diagnostics.push(format!("failure ({:?}): {}", failure.kind, failure.detail));
    }

    RunRecord {
        item_id: item.id.clone(),
        finished,
        success,
        needs_human,
        path_correct,
        l_real: session.calls_made.len(),
        l_gold: item.gold_path.len(),
        calls_made,
        gold_path,
        final_answer: session.final_answer.clone(),
        diagnostics,
    }
}

/// The record for an item whose engine could not even be built; scored as a
/// plain failure so one broken item cannot crash a benchmark.
pub fn setup_failure_record(item: &BenchItem, detail: &str) -> RunRecord {
    RunRecord {
        item_id: item.id.clone(),
        finished: false,
        success: false,
        needs_human: false,
        path_correct: false,
        l_real: 0,
        l_gold: item.gold_path.len(),
        calls_made: Vec::new(),
        gold_path: item.gold_path.clone(),
        final_answer: None,
        diagnostics: vec![format!("engine setup failed: {detail}")],
    }
}

/// Runs every item through an engine built by `make_engine` and aggregates
/// the scores.
pub async fn run_benchmark<F>(
    catalog: &ApiCatalog,
    items: &[BenchItem],
    mut make_engine: F,
) -> MetricsReport
where
    F: FnMut(&BenchItem) -> Result<SessionEngine, String>,
{
    let mut records = Vec::with_capacity(items.len());
    for item in items {
        let record = match make_engine(item) {
            Ok(engine) => {
                let session = engine.run(&item.instruction).await;
                evaluate_run(catalog, item, &session)
            }
            Err(detail) => setup_failure_record(item, &detail),
        };
        records.push(record);
    }
    MetricsReport::from_records(records)
}

/// Compares a scored run against an item's stated expectation; returns one
/// line per mismatch, empty when everything holds.
pub fn check_expectation(expect: &Expectation, record: &RunRecord, session: &Session) -> Vec<String> {
    let mut mismatches = Vec::new();
    if let Some(status) = expect.status {
        if session.status != status {
            mismatches.push(format!(
                "status: expected {status:?}, got {:?}",
                session.status
            ));
        }
    }
    if let Some(success) = expect.success {
        if record.success != success {
            mismatches.push(format!("success: expected {success}, got {}", record.success));
        }
    }
    if let Some(path_correct) = expect.path_correct {
        if record.path_correct != path_correct {
            mismatches.push(format!(
                "path_correct: expected {path_correct}, got {}",
                record.path_correct
            ));
        }
    }
    if let Some(needles) = &expect.final_answer_contains {
        let answer = record.final_answer.as_deref().unwrap_or("");
        for needle in needles {
            if !answer.contains(needle.as_str()) {
                mismatches.push(format!("final answer lacks {needle:?}: {answer:?}"));
            }
        }
    }
    if let Some(calls) = &expect.calls {
        if &record.calls_made != calls {
            mismatches.push(format!(
                "calls: expected {calls:?}, got {:?}",
                record.calls_made
            ));
        }
    }
    if let Some(kind) = expect.failure_kind {
        match &session.failure {
            Some(failure) if failure.kind == kind => {}
            other => mismatches.push(format!(
                "failure kind: expected {kind:?}, got {:?}",
                other.as_ref().map(|f| f.kind)
            )),
        }
    }
    if let Some(routes) = &expect.unmatched_contains {
        for route in routes {
            let hit = record
                .diagnostics
                .iter()
                .any(|d| d.starts_with("unmatchable call:") && d.contains(route.as_str()));
            if !hit {
                mismatches.push(format!("no unmatchable-call diagnostic mentions {route:?}"));
            }
        }
    }
    mismatches
}
