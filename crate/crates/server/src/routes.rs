//! Route table and handlers.

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use restpilot_core::api::{
    BenchRequest, BenchResponse, CatalogDetail, CatalogSummary, EndpointSummary, MatchRequest,
    MatchResponse, PlanDocsRequest, PlanDocsResponse, RegisterCatalogRequest, SessionRequest,
    SessionResponse,
};
use restpilot_core::catalog::parse_catalog;
use restpilot_core::config::build_engine;
use restpilot_core::eval::{
    check_expectation, dataset_stats, evaluate_run, load_dataset, setup_failure_record,
    validate_dataset,
};
use restpilot_core::{ApiCatalog, BenchItem, Method, MetricsReport};

use crate::{ApiError, AppState};

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/catalogs", get(list_catalogs).post(register_catalog))
        .route("/v1/catalogs/:name", get(catalog_detail))
        .route("/v1/catalogs/:name/digest", get(catalog_digest))
        .route("/v1/catalogs/:name/plan-docs", post(plan_docs))
        .route("/v1/catalogs/:name/match", post(match_route))
        .route("/v1/sessions", post(run_session))
        .route("/v1/bench", post(run_bench))
        .with_state(state)
        .nest("/mock/tmdb", restpilot_mock::tmdb_router())
        .nest("/mock/spotify", restpilot_mock::spotify_router())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

fn summarize(catalog: &ApiCatalog) -> CatalogSummary {
    CatalogSummary {
        name: catalog.name.clone(),
        base_url: catalog.base_url.clone(),
        endpoints: catalog.endpoints.len(),
    }
}

async fn catalog_named(state: &AppState, name: &str) -> Result<ApiCatalog, ApiError> {
    state
        .catalogs
        .read()
        .await
        .get(name)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("no catalog named '{name}'")))
}

async fn list_catalogs(State(state): State<AppState>) -> Json<Vec<CatalogSummary>> {
    let catalogs = state.catalogs.read().await;
    Json(catalogs.values().map(summarize).collect())
}

async fn register_catalog(
    State(state): State<AppState>,
    Json(req): Json<RegisterCatalogRequest>,
) -> Result<(StatusCode, Json<CatalogSummary>), ApiError> {
    let catalog = parse_catalog(&req.name, &req.text).map_err(ApiError::bad_request)?;
    let summary = summarize(&catalog);
    state.register(catalog).await;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn catalog_detail(
    State(state): State<AppState>,
    Path(name): Path<String>,
) -> Result<Json<CatalogDetail>, ApiError> {
    let catalog = catalog_named(&state, &name).await?;
    let endpoints = catalog
        .endpoints
        .iter()
        .map(|e| EndpointSummary {
            method: e.method.to_string(),
            route: e.route.as_str().to_string(),
            description: e.description.clone(),
        })
        .collect();
    Ok(Json(CatalogDetail {
        name: catalog.name,
        base_url: catalog.base_url,
        endpoints,
    }))
}

async fn catalog_digest(
    State(state): State<AppState>,
    Path(name): Path<String>,
) -> Result<String, ApiError> {
    let catalog = catalog_named(&state, &name).await?;
    Ok(catalog.selector_digest())
}

async fn plan_docs(
    State(state): State<AppState>,
    Path(name): Path<String>,
    Json(req): Json<PlanDocsRequest>,
) -> Result<Json<PlanDocsResponse>, ApiError> {
    let catalog = catalog_named(&state, &name).await?;
    let docs = catalog
        .caller_docs_for_plan(&req.plan)
        .map_err(ApiError::bad_request)?;
    Ok(Json(PlanDocsResponse { docs }))
}

async fn match_route(
    State(state): State<AppState>,
    Path(name): Path<String>,
    Json(req): Json<MatchRequest>,
) -> Result<Json<MatchResponse>, ApiError> {
    let catalog = catalog_named(&state, &name).await?;
    let method: Method = req.method.parse().map_err(ApiError::bad_request)?;
    let resp = match catalog.match_route(method, &req.path) {
        Ok(Some(m)) => MatchResponse {
            matched: true,
            label: Some(m.endpoint.label()),
            bindings: m.bindings,
        },
        Ok(None) => MatchResponse {
            matched: false,
            label: None,
            bindings: Vec::new(),
        },
        Err(e) => return Err(ApiError::bad_request(e)),
    };
    Ok(Json(resp))
}

/// Paths in the request config are read by this process; clients resolve
/// them to absolute paths before sending.
async fn run_session(
    Json(req): Json<SessionRequest>,
) -> Result<Json<SessionResponse>, ApiError> {
    let engine = build_engine(&req.config).map_err(ApiError::bad_request)?;
    let counter = engine.http.counter();
    let session = engine.run(&req.instruction).await;
    Ok(Json(SessionResponse {
        session,
        dispatch_total: counter.total(),
        dispatch_non_loopback: counter.non_loopback_total(),
    }))
}

async fn run_bench(Json(req): Json<BenchRequest>) -> Result<Json<BenchResponse>, ApiError> {
    // Items come from a dataset file or inline, never both. A file anchors
    // per-item replay paths at its directory; inline items arrive resolved.
    let (items, anchor): (Vec<BenchItem>, Option<std::path::PathBuf>) =
        match (&req.dataset, &req.items) {
            (Some(path), None) => {
                let items = load_dataset(path).map_err(ApiError::bad_request)?;
                (items, path.parent().map(Into::into))
            }
            (None, Some(items)) => (items.clone(), None),
            _ => {
                return Err(ApiError::bad_request(
                    "provide exactly one of 'dataset' or 'items'",
                ))
            }
        };

    let mut catalog =
        restpilot_core::catalog::load_catalog(&req.config.catalog).map_err(ApiError::bad_request)?;
    if let Some(base_url) = &req.config.base_url {
        catalog = catalog.with_base_url(base_url);
    }
    // Evaluation must normalize against the same endpoint set the engine saw.
    if req.config.noise_endpoints > 0 {
        catalog = catalog.with_noise_endpoints(req.config.noise_endpoints);
    }

    let stats = dataset_stats(&items);
    let validation_problems = validate_dataset(&catalog, &items);
    if req.stats_only {
        return Ok(Json(BenchResponse {
            stats,
            validation_problems,
            report: None,
            expectation_failures: Vec::new(),
        }));
    }

    // Checking expectations needs the session, so this loop cannot reuse
    // run_benchmark, which keeps only the scored record.
    let mut records = Vec::with_capacity(items.len());
    let mut expectation_failures = Vec::new();
    for item in &items {
        let config = req
            .config
            .clone()
            .with_item_files(
                item.replay_script.clone().map(Into::into),
                item.cassette.clone().map(Into::into),
            );
        let config = match &anchor {
            Some(dir) => config.resolved_against(dir),
            None => config,
        };
        let record = match build_engine(&config) {
            Ok(engine) => {
                let session = engine.run(&item.instruction).await;
                let record = evaluate_run(&catalog, item, &session);
                if req.check {
                    if let Some(expect) = &item.expect {
                        for mismatch in check_expectation(expect, &record, &session) {
                            expectation_failures.push(format!("{}: {mismatch}", item.id));
                        }
                    }
                }
                record
            }
            Err(e) => {
                if req.check && item.expect.is_some() {
                    expectation_failures.push(format!("{}: engine setup failed: {e}", item.id));
                }
                setup_failure_record(item, &e.to_string())
            }
        };
        records.push(record);
    }

    Ok(Json(BenchResponse {
        stats,
        validation_problems,
        report: Some(MetricsReport::from_records(records)),
        expectation_failures,
    }))
}
