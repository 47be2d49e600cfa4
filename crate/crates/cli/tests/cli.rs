//! Exit-code and output contracts of the binary: 0 for a finished outcome,
//! 1 for a failed one, 2 for configuration mistakes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn restpilot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_restpilot"))
        .args(args)
        .output()
        .unwrap()
}

fn path(rel: &str) -> String {
    fixtures().join(rel).to_str().unwrap().to_string()
}

#[test]
fn failed_session_exits_one_and_names_the_failure() {
    let out = restpilot(&[
        "replay",
        "What is the id of the second episode of season 1 of The Witcher?",
        "--catalog",
        &path("catalogs/tmdb.yaml"),
        "--replay",
        &path("cases/tmdb_witcher_episode/script.jsonl"),
        "--cassette",
        &path("cases/tmdb_witcher_episode/cassette.jsonl"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("status: failed"));
    assert!(stdout.contains("no_valid_endpoint_in_plan"));
    assert!(stdout.contains("GET /tv/63926/season/1/episode/2"));
}

#[test]
fn config_mistakes_exit_two() {
    // No backend at all.
    let out = restpilot(&[
        "run",
        "do it",
        "--catalog",
        &path("catalogs/tmdb.yaml"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--replay"));

    // Replay without the recorded traffic to serve calls from.
    let out = restpilot(&[
        "replay",
        "do it",
        "--catalog",
        &path("catalogs/tmdb.yaml"),
        "--replay",
        &path("cases/tmdb_director_count/script.jsonl"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cassette"));
}

#[test]
fn run_writes_the_full_session_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("session.json");
    let out = restpilot(&[
        "run",
        "Set the volume to 60 and skip to the next track.",
        "--catalog",
        &path("catalogs/spotify.yaml"),
        "--replay",
        &path("cases/spotify_volume_skip/script.jsonl"),
        "--cassette",
        &path("cases/spotify_volume_skip/cassette.jsonl"),
        "--frozen-clock",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(json["session"]["status"], "finished");
    assert_eq!(json["dispatch_total"], 0);
    assert_eq!(json["session"]["calls_made"].as_array().unwrap().len(), 2);
}

#[test]
fn inspect_prints_the_digest_one_line_per_endpoint() {
    let out = restpilot(&[
        "inspect",
        "--catalog",
        &path("catalogs/spotify.yaml"),
        "--digest",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 40);
    assert!(stdout.contains("PUT /me/player/volume"));
}

#[test]
fn inspect_match_misses_exit_one() {
    let out = restpilot(&[
        "inspect",
        "--catalog",
        &path("catalogs/tmdb.yaml"),
        "--match",
        "GET /tv/63926/season/1/episode/2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no documented route"));
}

#[test]
fn bench_stats_only_reports_composition_without_running() {
    let out = restpilot(&[
        "bench",
        "--dataset",
        &path("datasets/spotify.jsonl"),
        "--catalog",
        &path("catalogs/spotify.yaml"),
        "--stats-only",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("57 items"));
    assert!(stdout.contains("validation: ok"));
    assert!(!stdout.contains("success rate"));
}

#[test]
fn noise_endpoints_leave_replayed_outcomes_intact() {
    // Distractor endpoints widen the selector digest, but recorded
    // completions pin every choice, so scores cannot move.
    let out = restpilot(&[
        "bench",
        "--dataset",
        &path("suites/tmdb_cases.jsonl"),
        "--catalog",
        &path("catalogs/tmdb.yaml"),
        "--check",
        "--noise-endpoints",
        "25",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("success rate: 0.667"), "stdout: {stdout}");
}
