//! Deterministic stand-ins for the two showcase services: a movie database
//! under `/3` and a music player under `/v1`. Every response is fixed data,
//! so recordings against these routers are reproducible.

pub mod data;

use std::collections::HashMap;

use axum::extract::{Path, Query};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post, put};
use axum::{Json, Router};

/// Movie-database routes, mounted under `/3` like the real service.
pub fn tmdb_router() -> Router {
    let inner = Router::new()
        .route("/search/person", get(search_person))
        .route("/search/tv", get(search_tv))
        .route("/person/:person_id/movie_credits", get(person_movie_credits))
        .route("/movie/:movie_id/credits", get(movie_credits))
        .fallback(tmdb_not_found);
    Router::new().nest("/3", inner)
}

/// Music-player routes, mounted under `/v1` like the real service.
pub fn spotify_router() -> Router {
    let inner = Router::new()
        .route("/me/playlists", get(my_playlists))
        .route("/search", get(search))
        .route("/playlists/:playlist_id/tracks", post(add_tracks))
        .route("/me/player/volume", put(set_volume))
        .route("/me/player/next", post(skip_next))
        .route("/me/player/currently-playing", get(currently_playing))
        .route("/tracks/:track_id", get(track))
        .fallback(spotify_not_found);
    Router::new().nest("/v1", inner)
}

/// Both services on one router, for a single local listener.
pub fn combined_router() -> Router {
    tmdb_router().merge(spotify_router())
}

async fn tmdb_not_found() -> impl IntoResponse {
    (StatusCode::NOT_FOUND, Json(data::tmdb_not_found()))
}

async fn spotify_not_found() -> impl IntoResponse {
    (StatusCode::NOT_FOUND, Json(data::spotify_not_found()))
}

async fn search_person(Query(params): Query<HashMap<String, String>>) -> impl IntoResponse {
    let query = params.get("query").map(String::as_str).unwrap_or("");
    Json(data::search_person(query))
}

async fn search_tv(Query(params): Query<HashMap<String, String>>) -> impl IntoResponse {
    let query = params.get("query").map(String::as_str).unwrap_or("");
    Json(data::search_tv(query))
}

async fn person_movie_credits(Path(person_id): Path<i64>) -> impl IntoResponse {
    match data::person_movie_credits(person_id) {
        Some(body) => (StatusCode::OK, Json(body)),
        None => (StatusCode::NOT_FOUND, Json(data::tmdb_not_found())),
    }
}

async fn movie_credits(Path(movie_id): Path<i64>) -> impl IntoResponse {
    match data::movie_credits(movie_id) {
        Some(body) => (StatusCode::OK, Json(body)),
        None => (StatusCode::NOT_FOUND, Json(data::tmdb_not_found())),
    }
}

async fn my_playlists() -> impl IntoResponse {
    Json(data::my_playlists())
}

async fn search(Query(params): Query<HashMap<String, String>>) -> impl IntoResponse {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    Json(data::search_tracks(q))
}

async fn add_tracks(
    Path(playlist_id): Path<String>,
    body: Option<Json<serde_json::Value>>,
) -> impl IntoResponse {
    let has_uris = body
        .as_ref()
        .and_then(|Json(b)| b.get("uris"))
        .and_then(|u| u.as_array())
        .is_some_and(|u| !u.is_empty());
    if playlist_id != "6GHT" {
        return (StatusCode::NOT_FOUND, Json(data::spotify_not_found()));
    }
    if !has_uris {
        return (
            StatusCode::BAD_REQUEST,
            Json(serde_json::json!({"error": {"status": 400, "message": "No uris provided."}})),
        );
    }
    (StatusCode::CREATED, Json(data::add_tracks_snapshot()))
}

async fn set_volume(Query(params): Query<HashMap<String, String>>) -> impl IntoResponse {
    let valid = params
        .get("volume_percent")
        .and_then(|v| v.parse::<i64>().ok())
        .is_some_and(|v| (0..=100).contains(&v));
    if valid {
        StatusCode::NO_CONTENT.into_response()
    } else {
        (
            StatusCode::BAD_REQUEST,
            Json(serde_json::json!({
                "error": {"status": 400, "message": "volume_percent must be an integer 0-100."}
            })),
        )
            .into_response()
    }
}

async fn skip_next() -> impl IntoResponse {
    StatusCode::NO_CONTENT
}

async fn currently_playing() -> impl IntoResponse {
    Json(data::currently_playing())
}

async fn track(Path(track_id): Path<String>) -> impl IntoResponse {
    match data::track(&track_id) {
        Some(body) => (StatusCode::OK, Json(body)),
        None => (StatusCode::NOT_FOUND, Json(data::spotify_not_found())),
    }
}
