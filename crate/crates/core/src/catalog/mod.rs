//! The endpoint catalog: a normalized view of one OpenAPI document, plus the
//! role-specific projections of it (one-line digests for selection, full
//! docs for call formulation, response schemas for parsing).

mod loader;
pub mod render;
mod route;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use loader::{load_catalog, parse_catalog};
pub use route::{RouteTemplate, Segment};

/// Marker a selector plan may use instead of naming an endpoint; such plans
/// skip endpoint validation and execution entirely.
pub const NO_CALL_MARKER: &str = "No API call needed";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unsupported OpenAPI version '{found}': only 3.x documents are accepted")]
    UnsupportedVersion { found: String },
    #[error("unresolvable reference '{reference}'")]
    UnresolvableRef { reference: String },
    #[error("malformed API document: {reason}")]
    MalformedDocument { reason: String },
    #[error("malformed route template '{template}': {reason}")]
    MalformedRouteTemplate { template: String, reason: String },
    #[error("ambiguous route: {method} {path} matches {candidates:?} equally well")]
    AmbiguousRoute {
        method: Method,
        path: String,
        candidates: Vec<String>,
    },
    #[error("plan mentions no catalog endpoint: {plan:?}")]
    NoEndpointMentioned { plan: String },
    #[error("cannot read API document: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GET")]
    Get,
    #[serde(rename = "POST")]
    Post,
    #[serde(rename = "PUT")]
    Put,
    #[serde(rename = "PATCH")]
    Patch,
    #[serde(rename = "DELETE")]
    Delete,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
            Method::Put => "PUT",
            Method::Patch => "PATCH",
            Method::Delete => "DELETE",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GET" => Ok(Method::Get),
            "POST" => Ok(Method::Post),
            "PUT" => Ok(Method::Put),
            "PATCH" => Ok(Method::Patch),
            "DELETE" => Ok(Method::Delete),
            other => Err(format!("unknown HTTP method '{other}'")),
        }
    }
}

/// Where a parameter is carried in the request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamLocation {
    Path,
    Query,
    Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub location: ParamLocation,
    /// Declared primitive type: string, integer, number or boolean.
    pub data_type: String,
    pub required: bool,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enum_values: Vec<Value>,
}

/// A response schema reduced to the shape the parser needs. References are
/// inlined up to a fixed depth; deeper nesting collapses to `Recursive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemaNode {
    Object {
        properties: IndexMap<String, SchemaNode>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
    },
    Array {
        items: Box<SchemaNode>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
    },
    Primitive {
        primitive: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
    },
    /// The document declared no schema at all.
    Empty,
    /// Reference nesting exceeded the inlining depth cap.
    Recursive,
}

impl SchemaNode {
    pub fn is_empty(&self) -> bool {
        matches!(self, SchemaNode::Empty)
    }

    pub fn object(pairs: Vec<(&str, SchemaNode)>) -> SchemaNode {
        SchemaNode::Object {
            properties: pairs
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            description: None,
        }
    }

    pub fn array(items: SchemaNode) -> SchemaNode {
        SchemaNode::Array {
            items: Box::new(items),
            description: None,
        }
    }

    pub fn primitive(kind: &str) -> SchemaNode {
        SchemaNode::Primitive {
            primitive: kind.to_string(),
            description: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub status: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    pub method: Method,
    pub route: RouteTemplate,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub parameters: Vec<ParameterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_body_schema: Option<SchemaNode>,
    pub response_schema: SchemaNode,
    #[serde(default)]
    pub response_description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_example: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub error_docs: Vec<ErrorDoc>,
}

impl EndpointSpec {
    /// "METHOD /route" identity, the form used in plans and gold paths.
    pub fn label(&self) -> String {
        format!("{} {}", self.method, self.route)
    }
}

/// A successful concrete-path match.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteMatch<'a> {
    pub endpoint: &'a EndpointSpec,
    pub bindings: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiCatalog {
    pub name: String,
    pub base_url: String,
    /// The server URL from the source document, kept when `base_url` is
    /// overridden so URLs written against the documented host still resolve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub documented_base_url: Option<String>,
    pub endpoints: Vec<EndpointSpec>,
}

impl ApiCatalog {
    /// Looks up an endpoint by exact (method, template) identity.
    pub fn endpoint(&self, method: Method, template: &str) -> Option<&EndpointSpec> {
        self.endpoints
            .iter()
            .find(|e| e.method == method && e.route.as_str() == template)
    }

    /// Matches a concrete path against all templates for `method` and picks
    /// the unique most-specific one (most literal segments). A tie between
    /// distinct templates is an `AmbiguousRoute` error; no match is `None`.
    pub fn match_route(
        &self,
        method: Method,
        concrete_path: &str,
    ) -> Result<Option<RouteMatch<'_>>, CatalogError> {
        let mut best: Vec<(&EndpointSpec, Vec<(String, String)>)> = Vec::new();
        let mut best_score = 0usize;
        for ep in self.endpoints.iter().filter(|e| e.method == method) {
            if let Some(bindings) = ep.route.match_path(concrete_path) {
                let score = ep.route.literal_count();
                if best.is_empty() || score > best_score {
                    best = vec![(ep, bindings)];
                    best_score = score;
                } else if score == best_score {
                    best.push((ep, bindings));
                }
            }
        }
        match best.len() {
            0 => Ok(None),
            1 => {
                let (endpoint, bindings) = best.pop().unwrap();
                Ok(Some(RouteMatch { endpoint, bindings }))
            }
            _ => Err(CatalogError::AmbiguousRoute {
                method,
                path: concrete_path.to_string(),
                candidates: best.iter().map(|(e, _)| e.route.as_str().into()).collect(),
            }),
        }
    }

    /// Resolves a route mention from a plan or gold path: template text is
    /// matched by identity, concrete paths via `match_route`.
    pub fn resolve_mention(&self, method: Method, path: &str) -> Option<&EndpointSpec> {
        if path.contains('{') {
            self.endpoint(method, path)
        } else {
            self.match_route(method, path).ok().flatten().map(|m| m.endpoint)
        }
    }

    /// Response schema for the parser role. Unknown endpoints and endpoints
    /// without a documented response both yield the empty-schema marker.
    pub fn schema_for(&self, method: Method, route: &str) -> &SchemaNode {
        static EMPTY: SchemaNode = SchemaNode::Empty;
        self.resolve_mention(method, route)
            .map(|e| &e.response_schema)
            .unwrap_or(&EMPTY)
    }

    /// Returns a copy with a different base URL, for pointing a catalog at a
    /// local mock of the real service.
    pub fn with_base_url(&self, base_url: &str) -> ApiCatalog {
        let mut out = self.clone();
        out.documented_base_url = self
            .documented_base_url
            .clone()
            .or_else(|| Some(self.base_url.clone()));
        out.base_url = base_url.trim_end_matches('/').to_string();
        out
    }

    /// Returns a copy with `count` synthetic distractor endpoints appended.
    /// Generation is deterministic and the `/distractors_` route prefix keeps
    /// them clear of real documents, so selector-robustness runs stay
    /// reproducible and replayable.
    pub fn with_noise_endpoints(&self, count: usize) -> ApiCatalog {
        const THEMES: &[(Method, &str, &str, &str)] = &[
            (
                Method::Get,
                "slots",
                "Lists the storage slots registered under this namespace.",
                "Slot inventory for the namespace.",
            ),
            (
                Method::Post,
                "shipments",
                "Creates an outbound shipment and schedules its pickup.",
                "The shipment that was created.",
            ),
            (
                Method::Get,
                "readings",
                "Returns the most recent sensor readings for this namespace.",
                "Latest readings, newest first.",
            ),
            (
                Method::Put,
                "threshold",
                "Replaces the alert threshold for this namespace.",
                "The threshold now in effect.",
            ),
            (
                Method::Delete,
                "drafts",
                "Discards every unsent draft in this namespace.",
                "Count of drafts removed.",
            ),
        ];
        let mut out = self.clone();
        for i in 0..count {
            let (method, tail, description, response_description) = THEMES[i % THEMES.len()];
            let route = RouteTemplate::parse(&format!("/distractors_{i}/{tail}"))
                .expect("generated template is well formed");
            out.endpoints.push(EndpointSpec {
                method,
                route,
                description: description.to_string(),
                parameters: Vec::new(),
                request_body_schema: None,
                response_schema: SchemaNode::object(vec![(
                    "status",
                    SchemaNode::primitive("string"),
                )]),
                response_description: response_description.to_string(),
                response_example: None,
                error_docs: Vec::new(),
            });
        }
        out
    }

    /// Strips the catalog base URL — current or documented — off an absolute
    /// URL (or any scheme://host prefix), leaving the concrete route path
    /// without query string.
    pub fn route_path_of(&self, url: &str) -> String {
        let without_query = url.split(['?', '#']).next().unwrap_or(url);
        let bases = std::iter::once(self.base_url.as_str())
            .chain(self.documented_base_url.as_deref());
        for base in bases {
            if let Some(rest) = without_query.strip_prefix(base.trim_end_matches('/')) {
                if rest.is_empty() {
                    return "/".to_string();
                }
                if rest.starts_with('/') {
                    return rest.to_string();
                }
            }
        }
        match url::Url::parse(without_query) {
            Ok(u) => u.path().to_string(),
            Err(_) => {
                if without_query.starts_with('/') {
                    without_query.to_string()
                } else {
                    format!("/{without_query}")
                }
            }
        }
    }
}

/// Extracts `METHOD /path` mentions from free text, in order of appearance.
pub fn extract_route_mentions(text: &str) -> Vec<(Method, String)> {
    use std::sync::OnceLock;
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        regex::Regex::new(r"(?i)\b(GET|POST|PUT|PATCH|DELETE)\s+(/[^\s,;'\x22)]*)").unwrap()
    });
    re.captures_iter(text)
        .filter_map(|c| {
            let method = Method::from_str(&c[1]).ok()?;
            let path = c[2].trim_end_matches(['.', ':', ',']).to_string();
            if path.len() > 1 {
                Some((method, path))
            } else {
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn catalog() -> ApiCatalog {
        let ep = |method, route: &str| EndpointSpec {
            method,
            route: RouteTemplate::parse(route).unwrap(),
            description: String::new(),
            parameters: vec![],
            request_body_schema: None,
            response_schema: SchemaNode::Empty,
            response_description: String::new(),
            response_example: None,
            error_docs: vec![],
        };
        ApiCatalog {
            name: "movies".into(),
            base_url: "https://api.example.org/3".into(),
            documented_base_url: None,
            endpoints: vec![
                ep(Method::Get, "/movie/latest"),
                ep(Method::Get, "/movie/{movie_id}"),
                ep(Method::Get, "/movie/{movie_id}/credits"),
                ep(Method::Get, "/person/{person_id}/movie_credits"),
            ],
        }
    }

    #[test]
    fn most_literal_template_wins() {
        let c = catalog();
        let m = c.match_route(Method::Get, "/movie/latest").unwrap().unwrap();
        assert_eq!(m.endpoint.route.as_str(), "/movie/latest");
        assert!(m.bindings.is_empty());

        let m = c.match_route(Method::Get, "/movie/550").unwrap().unwrap();
        assert_eq!(m.endpoint.route.as_str(), "/movie/{movie_id}");
        assert_eq!(m.bindings, vec![("movie_id".to_string(), "550".to_string())]);
    }

    #[test]
    fn no_match_is_none_and_tie_is_error() {
        let mut c = catalog();
        assert!(c
            .match_route(Method::Get, "/tv/63926/season/1/episode/2")
            .unwrap()
            .is_none());

        c.endpoints.push(EndpointSpec {
            method: Method::Get,
            route: RouteTemplate::parse("/movie/{other_id}").unwrap(),
            description: String::new(),
            parameters: vec![],
            request_body_schema: None,
            response_schema: SchemaNode::Empty,
            response_description: String::new(),
            response_example: None,
            error_docs: vec![],
        });
        let err = c.match_route(Method::Get, "/movie/550").unwrap_err();
        assert!(matches!(err, CatalogError::AmbiguousRoute { .. }));
    }

    #[test]
    fn method_must_match() {
        let c = catalog();
        assert!(c.match_route(Method::Post, "/movie/550").unwrap().is_none());
    }

    #[test]
    fn mention_extraction_finds_method_path_pairs() {
        let plan = "GET /search/person to find the id, then GET /person/1769/movie_credits.";
        let mentions = extract_route_mentions(plan);
        assert_eq!(
            mentions,
            vec![
                (Method::Get, "/search/person".to_string()),
                (Method::Get, "/person/1769/movie_credits".to_string()),
            ]
        );
        assert!(extract_route_mentions("No API call needed.").is_empty());
    }

    #[test]
    fn route_path_strips_base_url_and_query() {
        let c = catalog();
        assert_eq!(
            c.route_path_of("https://api.example.org/3/search/person?query=Sofia"),
            "/search/person"
        );
        assert_eq!(
            c.route_path_of("https://other.host/v1/me/player/next"),
            "/v1/me/player/next"
        );
        // URLs written against the documented host keep resolving after the
        // base is pointed at a local mock.
        let moved = c.with_base_url("http://127.0.0.1:4777/3");
        assert_eq!(
            moved.route_path_of("https://api.example.org/3/search/person?query=S"),
            "/search/person"
        );
        assert_eq!(
            moved.route_path_of("http://127.0.0.1:4777/3/search/person"),
            "/search/person"
        );
        assert_eq!(c.route_path_of("/movie/550"), "/movie/550");
    }

    #[test]
    fn schema_for_missing_endpoint_is_empty_marker() {
        let c = catalog();
        assert!(c.schema_for(Method::Get, "/nope").is_empty());
        assert!(c.schema_for(Method::Get, "/movie/{movie_id}").is_empty());
    }

    #[test]
    fn noise_endpoints_are_deterministic_additions() {
        let c = catalog();
        assert_eq!(c.with_noise_endpoints(0).endpoints, c.endpoints);

        let noisy = c.with_noise_endpoints(7);
        assert_eq!(noisy.endpoints.len(), c.endpoints.len() + 7);
        assert_eq!(noisy.endpoints[..c.endpoints.len()], c.endpoints[..]);
        assert_eq!(noisy.endpoints, c.with_noise_endpoints(7).endpoints);

        let labels: BTreeSet<String> = noisy.endpoints.iter().map(|e| e.label()).collect();
        assert_eq!(labels.len(), noisy.endpoints.len(), "labels stay unique");
        // Real routes keep matching; a distractor route matches its own spec.
        assert!(noisy.match_route(Method::Get, "/movie/550").unwrap().is_some());
        let m = noisy
            .match_route(Method::Get, "/distractors_0/slots")
            .unwrap()
            .unwrap();
        assert_eq!(m.endpoint.label(), "GET /distractors_0/slots");
    }
}
