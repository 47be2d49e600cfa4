//! Acceptance gate: one test per criterion, each ending in a single PASS
//! line. A failed assertion is the corresponding FAIL.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use serde_json::json;

use restpilot_core::agent::FailureKind;
use restpilot_core::catalog::load_catalog;
use restpilot_core::config::{build_engine, BackendConfig, HttpConfig, RunConfig};
use restpilot_core::eval::{dataset_stats, evaluate_run, is_subsequence, load_dataset};
use restpilot_core::executor::{CallDescriptor, Executor, ParseStrategy};
use restpilot_core::gateway::{PromptSet, ReplayBackend, ReplayScript, ScriptEvent};
use restpilot_core::http::HttpEngine;
use restpilot_core::{
    ApiCatalog, Gateway, Method, MetricsReport, Role, RunRecord, Session, SessionStatus,
};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn catalog_for(suite: &str) -> ApiCatalog {
    let file = if suite.starts_with("tmdb") {
        "tmdb.yaml"
    } else {
        "spotify.yaml"
    };
    load_catalog(fixtures().join("catalogs").join(file)).unwrap()
}

/// Runs one suite item from its recordings and scores it.
async fn run_suite_item(suite: &str, id: &str) -> (Session, RunRecord, Duration) {
    let path = fixtures().join("suites").join(suite);
    let items = load_dataset(&path).unwrap();
    let item = items.into_iter().find(|i| i.id == id).expect("item id");
    let catalog = catalog_for(suite);
    let config = RunConfig {
        catalog: fixtures().join("catalogs").join(format!("{}.yaml", catalog.name)),
        base_url: None,
        backend: BackendConfig::Replay {
            script: PathBuf::new(),
        },
        http: Default::default(),
        step_budget: 10,
        prompts_dir: None,
        frozen_clock: true,
        noise_endpoints: 0,
        context_window: None,
        transcript: None,
    }
    .with_item_files(
        item.replay_script.clone().map(Into::into),
        item.cassette.clone().map(Into::into),
    )
    .resolved_against(path.parent().unwrap());
    let engine = build_engine(&config).unwrap();
    let started = Instant::now();
    let session = engine.run(&item.instruction).await;
    let elapsed = started.elapsed();
    let record = evaluate_run(&catalog, &item, &session);
    (session, record, elapsed)
}

#[tokio::test]
async fn golden_sessions_replay_to_expected_answers_over_exact_paths() {
    let cases: [(&str, &str, &str, &[&str]); 4] = [
        (
            "tmdb_cases.jsonl",
            "tmdb_director_count",
            "14 movies",
            &["GET /search/person", "GET /person/{person_id}/movie_credits"],
        ),
        (
            "tmdb_cases.jsonl",
            "tmdb_latest_movie_director",
            "Martin Scorsese (1032)",
            &[
                "GET /search/person",
                "GET /person/{person_id}/movie_credits",
                "GET /movie/{movie_id}/credits",
            ],
        ),
        (
            "spotify_cases.jsonl",
            "spotify_volume_skip",
            "set the volume to 60 and skipped",
            &["PUT /me/player/volume", "POST /me/player/next"],
        ),
        (
            "spotify_cases.jsonl",
            "spotify_add_track",
            "added Summertime Sadness",
            &[
                "GET /me/playlists",
                "GET /search",
                "POST /playlists/{playlist_id}/tracks",
            ],
        ),
    ];
    for (suite, id, answer_part, calls) in cases {
        let (session, record, elapsed) = run_suite_item(suite, id).await;
        assert!(
            elapsed < Duration::from_secs(2),
            "{id}: replay took {elapsed:?}"
        );
        assert_eq!(session.status, SessionStatus::Finished, "{id}");
        let answer = session.final_answer.as_deref().unwrap_or("");
        assert!(
            answer.contains(answer_part),
            "{id}: answer {answer:?} lacks {answer_part:?}"
        );
        assert_eq!(record.calls_made, calls, "{id}");
        assert!(record.success, "{id}");
    }
    println!("PASS: four recorded sessions replay to their expected answers over their exact call paths in under 2s each");
}

#[tokio::test]
async fn failure_sessions_are_scored_as_recorded() {
    let (witcher, record, _) = run_suite_item("tmdb_cases.jsonl", "tmdb_witcher_episode").await;
    assert_eq!(witcher.status, SessionStatus::Failed);
    let failure = witcher.failure.as_ref().expect("failure record");
    assert_eq!(failure.kind, FailureKind::NoValidEndpointInPlan);
    let attempted = witcher.attempted_unmatched();
    assert!(
        attempted.contains(&(Method::Get, "/tv/63926/season/1/episode/2".to_string())),
        "attempted: {attempted:?}"
    );
    assert!(
        record
            .diagnostics
            .iter()
            .any(|d| d.contains("unmatchable call") && d.contains("/tv/63926/season/1/episode/2")),
        "diagnostics: {:?}",
        record.diagnostics
    );
    assert!(!record.path_correct);
    assert!(!record.success);

    let (wrong, record, _) = run_suite_item("spotify_cases.jsonl", "spotify_wrong_song").await;
    assert_eq!(wrong.status, SessionStatus::Finished);
    assert!(!record.success, "wrong-song answer must fail the oracle");
    assert!(!record.needs_human);
    assert!(record.path_correct, "calls still follow the gold path");
    println!("PASS: an undocumented-endpoint plan fails as no_valid_endpoint_in_plan and a schema-valid wrong answer scores unsuccessful on a correct path");
}

#[test]
fn extra_call_penalty_averages_over_successes_only() {
    let record = |success: bool, l_real: usize, l_gold: usize| RunRecord {
        item_id: format!("{l_real}-{l_gold}"),
        finished: success,
        success,
        needs_human: false,
        path_correct: success,
        l_real,
        l_gold,
        calls_made: Vec::new(),
        gold_path: Vec::new(),
        final_answer: None,
        diagnostics: Vec::new(),
    };
    let delta_of = |records: Vec<RunRecord>| {
        MetricsReport::from_records(records)
            .delta_solution_len
            .unwrap()
    };
    let surplus_one = delta_of(vec![record(true, 3, 2)]);
    assert!((surplus_one - 1.0).abs() < 1e-12, "delta {surplus_one}");
    let surplus_zero = delta_of(vec![record(true, 2, 2)]);
    assert!(surplus_zero.abs() < 1e-12, "delta {surplus_zero}");
    // Failures carry extra calls but never count toward the penalty.
    let failure_excluded = delta_of(vec![record(true, 4, 3), record(false, 9, 2)]);
    assert!(
        (failure_excluded - 1.0).abs() < 1e-12,
        "delta {failure_excluded}"
    );
    let combined = delta_of(vec![
        record(true, 3, 2),
        record(true, 2, 2),
        record(true, 3, 2),
        record(false, 9, 1),
    ]);
    assert!(
        (combined - (1.0 + 0.0 + 1.0) / 3.0).abs() < 1e-12,
        "delta {combined}"
    );
    println!("PASS: extra-call penalty is +1.0 / 0.0 / +1.0 on the three pinned record sets within 1e-12 and failures never count");
}

#[test]
fn subsequence_check_agrees_with_brute_force_on_10000_random_instances() {
    fn brute_force(needle: &[u8], haystack: &[u8]) -> bool {
        match (needle.split_first(), haystack.split_first()) {
            (None, _) => true,
            (_, None) => false,
            (Some((n, rest_n)), Some((h, rest_h))) => {
                (n == h && brute_force(rest_n, rest_h)) || brute_force(needle, rest_h)
            }
        }
    }
    let mut runner = TestRunner::new(PropConfig {
        cases: 10_000,
        ..PropConfig::default()
    });
    let strategy = (
        proptest::collection::vec(0u8..6, 0..=8),
        proptest::collection::vec(0u8..6, 0..=8),
    );
    runner
        .run(&strategy, |(needle, haystack)| {
            prop_assert_eq!(
                is_subsequence(&needle, &haystack),
                brute_force(&needle, &haystack),
                "needle {:?} haystack {:?}",
                needle,
                haystack
            );
            Ok(())
        })
        .unwrap();
    println!("PASS: greedy gold-path subsequence check matches a brute-force oracle on 10000 random instances");
}

#[test]
fn shipped_datasets_have_the_stated_composition() {
    let tmdb = load_dataset(fixtures().join("datasets/tmdb.jsonl")).unwrap();
    let stats = dataset_stats(&tmdb);
    assert_eq!(stats.n, 100);
    assert_eq!(
        stats.histogram,
        BTreeMap::from([(1, 5), (2, 66), (3, 27), (4, 2)])
    );
    assert!(
        (stats.mean_gold_length - 2.3).abs() < 0.05,
        "tmdb mean {}",
        stats.mean_gold_length
    );

    let spotify = load_dataset(fixtures().join("datasets/spotify.jsonl")).unwrap();
    let stats = dataset_stats(&spotify);
    assert_eq!(stats.n, 57);
    assert_eq!(
        stats.histogram,
        BTreeMap::from([(1, 8), (2, 18), (3, 22), (4, 9)])
    );
    assert!(
        (stats.mean_gold_length - 2.6).abs() < 0.05,
        "spotify mean {}",
        stats.mean_gold_length
    );

    for (name, items) in [("tmdb", &tmdb), ("spotify", &spotify)] {
        let catalog = catalog_for(name);
        let problems = restpilot_core::eval::validate_dataset(&catalog, items);
        assert!(problems.is_empty(), "{name}: {problems:?}");
    }
    println!("PASS: shipped datasets hold 100 and 57 items with the stated gold-length histograms and means within 0.05");
}

#[tokio::test]
async fn each_role_sees_only_its_slice_of_the_catalog() {
    let case = fixtures().join("cases/tmdb_director_count");
    let config = RunConfig {
        catalog: fixtures().join("catalogs/tmdb.yaml"),
        base_url: None,
        backend: BackendConfig::Replay {
            script: case.join("script.jsonl"),
        },
        http: HttpConfig {
            mode: None,
            cassette: Some(case.join("cassette.jsonl")),
            loopback_only: false,
            auth: None,
        },
        step_budget: 10,
        prompts_dir: None,
        frozen_clock: true,
        noise_endpoints: 0,
        context_window: None,
        transcript: None,
    };
    let engine = build_engine(&config).unwrap();
    let session = engine
        .run("How many movies has Sofia Coppola directed?")
        .await;
    assert_eq!(session.status, SessionStatus::Finished);

    let events = engine.gateway.transcript();
    let catalog = load_catalog(&config.catalog).unwrap();
    let digest = catalog.selector_digest();
    // A response-schema property name; it must never reach the selector.
    assert!(!digest.contains("known_for_department"));

    let selector = events
        .iter()
        .find(|e| e.role == Role::Selector)
        .expect("selector event");
    assert!(
        selector.prompt.contains(&digest),
        "selector prompt lacks the full endpoint digest"
    );
    assert!(!selector.prompt.contains("known_for_department"));

    // Docs blocks open with "Endpoint: METHOD /route"; the background may
    // name earlier calls, but their documentation must not ride along.
    let callers: Vec<_> = events.iter().filter(|e| e.role == Role::Caller).collect();
    assert!(callers.len() >= 2);
    let first = &callers[0].prompt;
    assert!(first.contains("Endpoint: GET /search/person"));
    assert!(
        !first.contains("Endpoint: GET /person/{person_id}/movie_credits"),
        "caller docs must cover only endpoints the current plan names"
    );
    let second_plan = callers
        .iter()
        .find(|e| e.prompt.contains("Endpoint: GET /person/{person_id}/movie_credits"))
        .expect("caller event for the credits plan");
    assert!(!second_plan.prompt.contains("Endpoint: GET /search/person"));

    let parser = events
        .iter()
        .find(|e| e.role == Role::Parser)
        .expect("parser event");
    assert!(
        parser.prompt.contains("known_for_department"),
        "parser prompt lacks the response schema"
    );
    println!("PASS: selector sees the one-line digest without schemas, caller sees docs only for plan-named endpoints, parser sees the response schema");
}

#[tokio::test]
async fn response_distilling_prefers_programs_and_falls_back_on_bad_ones() {
    let catalog = load_catalog(fixtures().join("catalogs/tmdb.yaml")).unwrap();
    let endpoint = catalog
        .resolve_mention(Method::Get, "/person/{person_id}/movie_credits")
        .unwrap();
    let body = json!({
        "id": 1769,
        "cast": [],
        "crew": [
            {"id": 10, "title": "One", "job": "Director", "department": "Directing", "release_date": "2020-01-01"},
            {"id": 11, "title": "Two", "job": "Director", "department": "Directing", "release_date": "2023-05-04"}
        ]
    });
    let descriptor = CallDescriptor {
        method: Method::Get,
        url: "https://api.themoviedb.org/3/person/1769/movie_credits".into(),
        description: "get the movie credits of the person".into(),
        output_instructions: Some("How many movies has the person directed?".into()),
        query_params: BTreeMap::new(),
        body: None,
    };
    let prompts = PromptSet::builtin();
    let http = HttpEngine::live().unwrap();

    // One scripted parser turn: a valid program needs no fallback turn.
    let script = ReplayScript::new(vec![ScriptEvent {
        role: Role::Parser,
        completion: " crew | filter job == \"Director\" | count | format \"{} movies\"".into(),
        prompt_contains: None,
    }]);
    let gateway = Gateway::new(Arc::new(ReplayBackend::new(script))).with_frozen_clock(true);
    let executor = Executor {
        catalog: &catalog,
        gateway: &gateway,
        http: &http,
        prompts: &prompts,
    };
    let outcome = executor
        .parse_response(&descriptor, endpoint, &body)
        .await
        .unwrap();
    assert_eq!(outcome.strategy, ParseStrategy::Program);
    assert!(outcome.program_error.is_none());
    assert_eq!(outcome.summary, "2 movies");

    // A program that fails the static check consumes a second turn for the
    // free-text fallback and keeps the broken program and its error.
    let script = ReplayScript::new(vec![
        ScriptEvent {
            role: Role::Parser,
            completion: " crew | explode".into(),
            prompt_contains: None,
        },
        ScriptEvent {
            role: Role::Parser,
            completion: " The person has directed two movies.".into(),
            prompt_contains: None,
        },
    ]);
    let gateway = Gateway::new(Arc::new(ReplayBackend::new(script))).with_frozen_clock(true);
    let executor = Executor {
        catalog: &catalog,
        gateway: &gateway,
        http: &http,
        prompts: &prompts,
    };
    let outcome = executor
        .parse_response(&descriptor, endpoint, &body)
        .await
        .unwrap();
    assert_eq!(outcome.strategy, ParseStrategy::LlmFallback);
    assert!(outcome.program_error.is_some());
    assert_eq!(outcome.summary, "The person has directed two movies.");
    println!("PASS: valid extraction programs run without fallback; a program failing the static check falls back to free text and keeps the error");
}

#[test]
fn frozen_clock_benchmark_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = [dir.path().join("first.json"), dir.path().join("second.json")];
    for path in &out {
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_restpilot"))
            .args([
                "bench",
                "--dataset",
                fixtures().join("suites/tmdb_cases.jsonl").to_str().unwrap(),
                "--catalog",
                fixtures().join("catalogs/tmdb.yaml").to_str().unwrap(),
                "--check",
                "--frozen-clock",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "bench run failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let first = std::fs::read(&out[0]).unwrap();
    let second = std::fs::read(&out[1]).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, second, "reports differ between identical runs");
    println!("PASS: two frozen-clock benchmark runs write byte-identical report files");
}

#[tokio::test]
async fn replayed_sessions_never_touch_the_network() {
    let case = fixtures().join("cases/spotify_add_track");
    let config = RunConfig {
        catalog: fixtures().join("catalogs/spotify.yaml"),
        base_url: None,
        backend: BackendConfig::Replay {
            script: case.join("script.jsonl"),
        },
        http: HttpConfig {
            mode: None,
            cassette: Some(case.join("cassette.jsonl")),
            loopback_only: false,
            auth: None,
        },
        step_budget: 10,
        prompts_dir: None,
        frozen_clock: true,
        noise_endpoints: 0,
        context_window: None,
        transcript: None,
    };
    let engine = build_engine(&config).unwrap();
    let counter = engine.http.counter();
    let session = engine
        .run("Add the track Summertime Sadness by Lana Del Rey to my first playlist.")
        .await;
    assert_eq!(session.status, SessionStatus::Finished);
    assert_eq!(session.calls_made.len(), 3, "traffic came from the cassette");
    assert_eq!(counter.total(), 0, "replay dispatched a real request");
    assert_eq!(counter.non_loopback_total(), 0);
    println!("PASS: a replayed session answers from its cassette with zero real dispatches");
}

/// Needs RESTPILOT_LIVE_URL (and optionally RESTPILOT_LIVE_MODEL,
/// RESTPILOT_LIVE_KEY_ENV) pointing at a completion endpoint; HTTP stays on
/// the in-process mock either way.
#[tokio::test]
async fn live_model_smoke_when_configured() {
    let Ok(url) = std::env::var("RESTPILOT_LIVE_URL") else {
        println!("PASS: live model smoke skipped (RESTPILOT_LIVE_URL not set)");
        return;
    };
    let model = std::env::var("RESTPILOT_LIVE_MODEL").unwrap_or_else(|_| "default".to_string());
    let key_env =
        std::env::var("RESTPILOT_LIVE_KEY_ENV").unwrap_or_else(|_| "LLM_API_KEY".to_string());

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        let _ = axum::serve(listener, restpilot_mock::tmdb_router()).await;
    });

    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        catalog: fixtures().join("catalogs/tmdb.yaml"),
        base_url: Some(format!("http://{addr}/3")),
        backend: serde_json::from_value(json!({
            "kind": "live", "url": url, "model": model, "api_key_env": key_env
        }))
        .unwrap(),
        http: HttpConfig {
            mode: Some(restpilot_core::HttpMode::Record),
            cassette: Some(dir.path().join("live_smoke.jsonl")),
            loopback_only: true,
            auth: None,
        },
        step_budget: 6,
        prompts_dir: None,
        frozen_clock: false,
        noise_endpoints: 0,
        context_window: None,
        transcript: None,
    };
    let engine = build_engine(&config).unwrap();
    let session = engine
        .run("How many movies has Sofia Coppola directed?")
        .await;
    let events = engine.gateway.transcript();
    assert!(
        !events.is_empty(),
        "no completion reached the model endpoint"
    );
    println!(
        "PASS: live model smoke ran {} completions against {} (status {:?})",
        events.len(),
        engine.gateway.backend_id(),
        session.status
    );
}
