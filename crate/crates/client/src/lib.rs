//! Typed client for the engine service. One method per endpoint; non-2xx
//! responses surface as `ClientError::Api` with the server's message.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use restpilot_core::api::{
    BenchRequest, BenchResponse, CatalogDetail, CatalogSummary, ErrorBody, MatchRequest,
    MatchResponse, PlanDocsRequest, PlanDocsResponse, RegisterCatalogRequest, SessionRequest,
    SessionResponse,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Http(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Api { status: u16, message: String },
}

#[derive(Debug, Clone)]
pub struct Client {
    base_url: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        Client {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Maps a non-2xx response to `Api`, preferring the JSON error body's
    /// message over raw text.
    async fn checked(resp: reqwest::Response) -> Result<reqwest::Response, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => body.error,
            Err(_) => text,
        };
        Err(ClientError::Api {
            status: status.as_u16(),
            message,
        })
    }

    async fn get_json<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = self
            .http
            .get(format!("{}{path}", self.base_url))
            .send()
            .await?;
        Ok(Self::checked(resp).await?.json().await?)
    }

    async fn post_json<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, ClientError> {
        let resp = self
            .http
            .post(format!("{}{path}", self.base_url))
            .json(body)
            .send()
            .await?;
        Ok(Self::checked(resp).await?.json().await?)
    }

    pub async fn health(&self) -> Result<(), ClientError> {
        let resp = self
            .http
            .get(format!("{}/health", self.base_url))
            .send()
            .await?;
        Self::checked(resp).await?;
        Ok(())
    }

    pub async fn catalogs(&self) -> Result<Vec<CatalogSummary>, ClientError> {
        self.get_json("/v1/catalogs").await
    }

    pub async fn register_catalog(
        &self,
        name: &str,
        text: &str,
    ) -> Result<CatalogSummary, ClientError> {
        let req = RegisterCatalogRequest {
            name: name.to_string(),
            text: text.to_string(),
        };
        self.post_json("/v1/catalogs", &req).await
    }

    pub async fn catalog(&self, name: &str) -> Result<CatalogDetail, ClientError> {
        self.get_json(&format!("/v1/catalogs/{name}")).await
    }

    /// The selector digest as plain text, one line per endpoint.
    pub async fn digest(&self, name: &str) -> Result<String, ClientError> {
        let resp = self
            .http
            .get(format!("{}/v1/catalogs/{name}/digest", self.base_url))
            .send()
            .await?;
        Ok(Self::checked(resp).await?.text().await?)
    }

    pub async fn plan_docs(&self, name: &str, plan: &str) -> Result<String, ClientError> {
        let req = PlanDocsRequest {
            plan: plan.to_string(),
        };
        let resp: PlanDocsResponse = self
            .post_json(&format!("/v1/catalogs/{name}/plan-docs"), &req)
            .await?;
        Ok(resp.docs)
    }

    pub async fn match_route(
        &self,
        name: &str,
        method: &str,
        path: &str,
    ) -> Result<MatchResponse, ClientError> {
        let req = MatchRequest {
            method: method.to_string(),
            path: path.to_string(),
        };
        self.post_json(&format!("/v1/catalogs/{name}/match"), &req)
            .await
    }

    pub async fn run_session(&self, req: &SessionRequest) -> Result<SessionResponse, ClientError> {
        self.post_json("/v1/sessions", req).await
    }

    pub async fn bench(&self, req: &BenchRequest) -> Result<BenchResponse, ClientError> {
        self.post_json("/v1/bench", req).await
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use restpilot_server::{spawn, AppState};

    async fn client() -> Client {
        let (addr, _handle) = spawn("127.0.0.1:0".parse().unwrap(), AppState::new())
            .await
            .unwrap();
        Client::new(format!("http://{addr}"))
    }

    const TINY_CATALOG: &str = r#"
openapi: 3.0.3
info: {title: Tiny, version: "1.0"}
servers: [{url: https://tiny.example/api}]
paths:
  /things/{id}:
    get:
      summary: Fetch one thing.
      parameters:
        - {name: id, in: path, required: true, schema: {type: string}}
      responses:
        "200":
          description: One thing.
          content:
            application/json:
              schema:
                type: object
                properties:
                  id: {type: string}
"#;

    #[tokio::test]
    async fn round_trips_catalog_registration_and_lookup() {
        let client = client().await;
        client.health().await.unwrap();

        let summary = client.register_catalog("tiny", TINY_CATALOG).await.unwrap();
        assert_eq!(summary.name, "tiny");
        assert_eq!(summary.endpoints, 1);

        let digest = client.digest("tiny").await.unwrap();
        assert_eq!(digest.lines().count(), 1);

        let matched = client
            .match_route("tiny", "GET", "/things/42")
            .await
            .unwrap();
        assert!(matched.matched);
        assert_eq!(matched.label.as_deref(), Some("GET /things/{id}"));

        let docs = client
            .plan_docs("tiny", "GET /things/{id} to fetch it")
            .await
            .unwrap();
        assert!(docs.contains("/things/{id}"));
    }

    #[tokio::test]
    async fn server_errors_carry_status_and_message() {
        let client = client().await;
        let err = client.digest("absent").await.unwrap_err();
        match err {
            ClientError::Api { status, message } => {
                assert_eq!(status, 404);
                assert!(message.contains("absent"));
            }
            other => panic!("expected Api error, got {other:?}"),
        }
    }
}
