//! Runs the shipped regression suites end to end through the benchmark
//! runner and pins the aggregate metrics: each suite scores 2/3 successful,
//! and every per-item expectation holds.

use std::path::{Path, PathBuf};

use restpilot_core::catalog::load_catalog;
use restpilot_core::config::{build_engine, BackendConfig, HttpConfig, RunConfig};
use restpilot_core::eval::{check_expectation, evaluate_run, load_dataset, run_benchmark};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(format!("{}/../../fixtures/{rel}", env!("CARGO_MANIFEST_DIR")))
}

fn suite_config(catalog: &Path) -> RunConfig {
    RunConfig {
        catalog: catalog.to_path_buf(),
        base_url: None,
        backend: BackendConfig::Replay {
            script: PathBuf::new(),
        },
        http: HttpConfig::default(),
        step_budget: 10,
        prompts_dir: None,
        frozen_clock: true,
        noise_endpoints: 0,
        context_window: None,
        transcript: None,
    }
}

async fn run_suite(catalog_rel: &str, suite_rel: &str) -> restpilot_core::MetricsReport {
    let catalog_path = fixture(catalog_rel);
    let suite_path = fixture(suite_rel);
    let base = suite_path.parent().unwrap().to_path_buf();
    let catalog = load_catalog(&catalog_path).unwrap();
    let items = load_dataset(&suite_path).unwrap();
    run_benchmark(&catalog, &items, |item| {
        let config = suite_config(&catalog_path)
            .with_item_files(
                item.replay_script.as_ref().map(PathBuf::from),
                item.cassette.as_ref().map(PathBuf::from),
            )
            .resolved_against(&base);
        build_engine(&config).map_err(|e| e.to_string())
    })
    .await
}

#[tokio::test]
async fn movie_suite_metrics_are_pinned() {
    let report = run_suite("catalogs/tmdb.yaml", "suites/tmdb_cases.jsonl").await;
    assert_eq!(report.n, 3);
    assert_eq!(report.n_success, 2);
    assert_eq!(report.n_needs_human, 0);
    assert!((report.success_rate.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((report.correct_path_rate.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((report.delta_solution_len.unwrap() - 0.0).abs() < 1e-12);
}

#[tokio::test]
async fn music_suite_metrics_are_pinned() {
    let report = run_suite("catalogs/spotify.yaml", "suites/spotify_cases.jsonl").await;
    assert_eq!(report.n, 3);
    assert_eq!(report.n_success, 2);
    assert_eq!(report.n_needs_human, 0);
    assert!((report.success_rate.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((report.correct_path_rate.unwrap() - 1.0).abs() < 1e-12);
    assert!((report.delta_solution_len.unwrap() - 0.0).abs() < 1e-12);
}

#[tokio::test]
async fn every_suite_item_meets_its_expectation() {
    for (catalog_rel, suite_rel) in [
        ("catalogs/tmdb.yaml", "suites/tmdb_cases.jsonl"),
        ("catalogs/spotify.yaml", "suites/spotify_cases.jsonl"),
    ] {
        let catalog_path = fixture(catalog_rel);
        let suite_path = fixture(suite_rel);
        let base = suite_path.parent().unwrap().to_path_buf();
        let catalog = load_catalog(&catalog_path).unwrap();
        for item in load_dataset(&suite_path).unwrap() {
            let config = suite_config(&catalog_path)
                .with_item_files(
                    item.replay_script.as_ref().map(PathBuf::from),
                    item.cassette.as_ref().map(PathBuf::from),
                )
                .resolved_against(&base);
            let engine = build_engine(&config).unwrap();
            let session = engine.run(&item.instruction).await;
            let record = evaluate_run(&catalog, &item, &session);
            let mismatches =
                check_expectation(item.expect.as_ref().unwrap(), &record, &session);
            assert!(mismatches.is_empty(), "{}: {mismatches:?}", item.id);
        }
    }
}
