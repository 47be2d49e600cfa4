//! HTTP service over the engine: catalog inspection, instruction runs, and
//! benchmarks as JSON endpoints, plus the local mock services under /mock.

mod routes;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use tokio::net::TcpListener;
use tokio::sync::RwLock;
use tokio::task::JoinHandle;

use restpilot_core::api::ErrorBody;
use restpilot_core::ApiCatalog;

pub use routes::router;

/// Shared server state: the catalogs registered so far, by name.
#[derive(Clone, Default)]
pub struct AppState {
    pub catalogs: Arc<RwLock<BTreeMap<String, ApiCatalog>>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub async fn register(&self, catalog: ApiCatalog) {
        self.catalogs
            .write()
            .await
            .insert(catalog.name.clone(), catalog);
    }
}

/// An error carried to the client as a status code plus a JSON body.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl ToString) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.to_string(),
        }
    }

    pub fn not_found(message: impl ToString) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message: message.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

/// Binds `addr` (port 0 picks a free one) and serves in a background task.
/// Returns the bound address and the task handle.
pub async fn spawn(
    addr: SocketAddr,
    state: AppState,
) -> std::io::Result<(SocketAddr, JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let handle = tokio::spawn(async move {
        let _ = axum::serve(listener, router(state)).await;
    });
    Ok((local, handle))
}
