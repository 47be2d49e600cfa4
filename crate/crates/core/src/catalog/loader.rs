//! OpenAPI 3.x ingestion. The loader flattens one document into the
//! `ApiCatalog` shape: references are inlined (up to a depth cap), parameter
//! and body shapes are normalized, and response schemas are kept per endpoint.

use std::path::Path;

use indexmap::IndexMap;
use serde_json::Value;

use super::{
    ApiCatalog, CatalogError, EndpointSpec, ErrorDoc, Method, ParamLocation, ParameterSpec,
    RouteTemplate, SchemaNode,
};

/// References nested deeper than this collapse to `SchemaNode::Recursive`.
const REF_DEPTH_CAP: usize = 8;

/// Reads an OpenAPI 3.x document (JSON or YAML) from disk. The catalog name
/// defaults to the file stem.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<ApiCatalog, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "catalog".to_string());
    parse_catalog(&name, &text)
}

/// Parses document text. JSON is detected by a leading `{`; everything else
/// goes through the YAML parser (which accepts JSON-style scalars too).
pub fn parse_catalog(name: &str, text: &str) -> Result<ApiCatalog, CatalogError> {
    let doc: Value = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| CatalogError::MalformedDocument {
            reason: format!("invalid JSON: {e}"),
        })?
    } else {
        serde_yaml::from_str(text).map_err(|e| CatalogError::MalformedDocument {
            reason: format!("invalid YAML: {e}"),
        })?
    };
    from_document(name, &doc)
}

pub fn from_document(name: &str, doc: &Value) -> Result<ApiCatalog, CatalogError> {
    if let Some(swagger) = doc.get("swagger").and_then(Value::as_str) {
        return Err(CatalogError::UnsupportedVersion {
            found: swagger.to_string(),
        });
    }
    let version = doc
        .get("openapi")
        .and_then(Value::as_str)
        .ok_or_else(|| CatalogError::MalformedDocument {
            reason: "missing 'openapi' version field".into(),
        })?;
    if !version.starts_with("3.") {
        return Err(CatalogError::UnsupportedVersion {
            found: version.to_string(),
        });
    }

    let base_url = doc
        .get("servers")
        .and_then(Value::as_array)
        .and_then(|s| s.first())
        .and_then(|s| s.get("url"))
        .and_then(Value::as_str)
        .ok_or_else(|| CatalogError::MalformedDocument {
            reason: "missing 'servers[0].url'".into(),
        })?;
    let parsed = url::Url::parse(base_url).map_err(|e| CatalogError::MalformedDocument {
        reason: format!("servers[0].url '{base_url}' is not absolute: {e}"),
    })?;
    if parsed.host_str().is_none() {
        return Err(CatalogError::MalformedDocument {
            reason: format!("servers[0].url '{base_url}' has no host"),
        });
    }
    let base_url = base_url.trim_end_matches('/').to_string();

    let resolver = Resolver { root: doc };
    let paths = doc
        .get("paths")
        .and_then(Value::as_object)
        .ok_or_else(|| CatalogError::MalformedDocument {
            reason: "missing 'paths' object".into(),
        })?;

    let mut endpoints = Vec::new();
    for (raw_route, item) in paths {
        let route = RouteTemplate::parse(raw_route)?;
        let shared_params = item
            .get("parameters")
            .and_then(Value::as_array)
            .cloned()
            .unwrap_or_default();
        for (key, method) in [
            ("get", Method::Get),
            ("post", Method::Post),
            ("put", Method::Put),
            ("patch", Method::Patch),
            ("delete", Method::Delete),
        ] {
            let Some(op) = item.get(key) else { continue };
            if endpoints
                .iter()
                .any(|e: &EndpointSpec| e.method == method && e.route.as_str() == raw_route)
            {
                return Err(CatalogError::MalformedDocument {
                    reason: format!("duplicate endpoint {method} {raw_route}"),
                });
            }
            endpoints.push(build_endpoint(&resolver, method, route.clone(), op, &shared_params)?);
        }
    }
    if endpoints.is_empty() {
        return Err(CatalogError::MalformedDocument {
            reason: "document defines no operations".into(),
        });
    }
    Ok(ApiCatalog {
        name: name.to_string(),
        base_url,
        documented_base_url: None,
        endpoints,
    })
}

struct Resolver<'a> {
    root: &'a Value,
}

impl Resolver<'_> {
    /// Follows a `#/a/b/c` pointer within the same document.
    fn lookup(&self, reference: &str) -> Result<&Value, CatalogError> {
        let pointer = reference.strip_prefix("#").filter(|p| p.starts_with('/'));
        pointer
            .and_then(|p| self.root.pointer(p))
            .ok_or_else(|| CatalogError::UnresolvableRef {
                reference: reference.to_string(),
            })
    }

    /// Resolves `$ref` indirection on a node, bumping the depth per hop.
    fn deref<'v>(&'v self, mut node: &'v Value, depth: &mut usize) -> Result<&'v Value, CatalogError> {
        while let Some(reference) = node.get("$ref").and_then(Value::as_str) {
            *depth += 1;
            if *depth > REF_DEPTH_CAP {
                return Ok(node);
            }
            node = self.lookup(reference)?;
        }
        Ok(node)
    }

    fn schema(&self, node: &Value, depth: usize) -> Result<SchemaNode, CatalogError> {
        let mut depth = depth;
        if node.get("$ref").is_some() {
            let mut probe = depth;
            let resolved = self.deref(node, &mut probe)?;
            if probe > REF_DEPTH_CAP {
                return Ok(SchemaNode::Recursive);
            }
            depth = probe;
            return self.schema(resolved, depth);
        }
        let description = node
            .get("description")
            .and_then(Value::as_str)
            .map(str::to_string);

        if let Some(all_of) = node.get("allOf").and_then(Value::as_array) {
            let mut properties = IndexMap::new();
            for part in all_of {
                if let SchemaNode::Object { properties: p, .. } = self.schema(part, depth + 1)? {
                    properties.extend(p);
                }
            }
            return Ok(SchemaNode::Object {
                properties,
                description,
            });
        }
        for combinator in ["oneOf", "anyOf"] {
            if let Some(first) = node
                .get(combinator)
                .and_then(Value::as_array)
                .and_then(|v| v.first())
            {
                return self.schema(first, depth + 1);
            }
        }

        let declared = node.get("type").and_then(Value::as_str);
        let kind = match declared {
            Some(t) => t.to_string(),
            None if node.get("properties").is_some() => "object".into(),
            None if node.get("items").is_some() => "array".into(),
            None => return Ok(SchemaNode::Empty),
        };
        match kind.as_str() {
            "object" => {
                let mut properties = IndexMap::new();
                if let Some(props) = node.get("properties").and_then(Value::as_object) {
                    for (name, sub) in props {
                        properties.insert(name.clone(), self.schema(sub, depth)?);
                    }
                }
                Ok(SchemaNode::Object {
                    properties,
                    description,
                })
            }
            "array" => {
                let items = match node.get("items") {
                    Some(sub) => self.schema(sub, depth)?,
                    None => SchemaNode::Empty,
                };
                Ok(SchemaNode::Array {
                    items: Box::new(items),
                    description,
                })
            }
            primitive => Ok(SchemaNode::Primitive {
                primitive: primitive.to_string(),
                description,
            }),
        }
    }
}

fn build_endpoint(
    resolver: &Resolver<'_>,
    method: Method,
    route: RouteTemplate,
    op: &Value,
    shared_params: &[Value],
) -> Result<EndpointSpec, CatalogError> {
    let description = op
        .get("description")
        .and_then(Value::as_str)
        .filter(|d| !d.trim().is_empty())
        .or_else(|| op.get("summary").and_then(Value::as_str))
        .unwrap_or("")
        .trim()
        .to_string();

    let mut parameters: Vec<ParameterSpec> = Vec::new();
    for raw in shared_params.iter().chain(
        op.get("parameters")
            .and_then(Value::as_array)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter(),
    ) {
        let mut depth = 0;
        let raw = resolver.deref(raw, &mut depth)?;
        let Some(param) = build_parameter(resolver, raw)? else {
            continue;
        };
        // Operation-level parameters override path-level ones of the same identity.
        parameters.retain(|p| !(p.name == param.name && p.location == param.location));
        parameters.push(param);
    }

    let mut request_body_schema = None;
    if let Some(body) = op.get("requestBody") {
        let mut depth = 0;
        let body = resolver.deref(body, &mut depth)?;
        if let Some(schema_node) = json_content_schema(body) {
            let schema = resolver.schema(schema_node, depth)?;
            let body_required = body.get("required").and_then(Value::as_bool).unwrap_or(false);
            if let SchemaNode::Object { properties, .. } = &schema {
                let required_names: Vec<&str> = schema_node
                    .get("required")
                    .and_then(Value::as_array)
                    .map(|v| v.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                for (name, node) in properties {
                    parameters.push(ParameterSpec {
                        name: name.clone(),
                        location: ParamLocation::Body,
                        data_type: primitive_name(node),
                        required: body_required && required_names.contains(&name.as_str()),
                        description: node_description(node),
                        default: None,
                        enum_values: vec![],
                    });
                }
            }
            request_body_schema = Some(schema);
        }
    }

    let mut response_schema = SchemaNode::Empty;
    let mut response_description = String::new();
    let mut response_example = None;
    let mut error_docs = Vec::new();
    if let Some(responses) = op.get("responses").and_then(Value::as_object) {
        let mut keys: Vec<&String> = responses.keys().collect();
        keys.sort();
        let success_key = ["200", "201", "202", "204"]
            .iter()
            .find(|k| responses.contains_key(**k))
            .map(|k| k.to_string())
            .or_else(|| keys.iter().find(|k| k.starts_with('2')).map(|k| k.to_string()));
        if let Some(key) = &success_key {
            let mut depth = 0;
            let resp = resolver.deref(&responses[key], &mut depth)?;
            response_description = resp
                .get("description")
                .and_then(Value::as_str)
                .unwrap_or("")
                .trim()
                .to_string();
            if let Some(schema_node) = json_content_schema(resp) {
                response_schema = resolver.schema(schema_node, depth)?;
                response_example = content_example(resp);
            }
        }
        for key in keys {
            if Some(key.as_str()) == success_key.as_deref() || key.starts_with('2') {
                continue;
            }
            let mut depth = 0;
            let resp = resolver.deref(&responses[key], &mut depth)?;
            error_docs.push(ErrorDoc {
                status: key.clone(),
                description: resp
                    .get("description")
                    .and_then(Value::as_str)
                    .unwrap_or("")
                    .trim()
                    .to_string(),
            });
        }
    }

    Ok(EndpointSpec {
        method,
        route,
        description,
        parameters,
        request_body_schema,
        response_schema,
        response_description,
        response_example,
        error_docs,
    })
}

fn build_parameter(
    resolver: &Resolver<'_>,
    raw: &Value,
) -> Result<Option<ParameterSpec>, CatalogError> {
    let name = raw.get("name").and_then(Value::as_str).unwrap_or("");
    let location = match raw.get("in").and_then(Value::as_str) {
        Some("path") => ParamLocation::Path,
        Some("query") => ParamLocation::Query,
        // Header and cookie parameters are transport detail the planner
        // never decides; they are dropped from the catalog view.
        _ => return Ok(None),
    };
    if name.is_empty() {
        return Err(CatalogError::MalformedDocument {
            reason: "parameter without a name".into(),
        });
    }
    let schema = match raw.get("schema") {
        Some(s) => {
            let mut depth = 0;
            resolver.deref(s, &mut depth)?.clone()
        }
        None => Value::Object(Default::default()),
    };
    let data_type = schema
        .get("type")
        .and_then(Value::as_str)
        .unwrap_or("string")
        .to_string();
    Ok(Some(ParameterSpec {
        name: name.to_string(),
        location,
        data_type,
        required: location == ParamLocation::Path
            || raw.get("required").and_then(Value::as_bool).unwrap_or(false),
        description: raw
            .get("description")
            .and_then(Value::as_str)
            .unwrap_or("")
            .trim()
            .to_string(),
        default: schema.get("default").cloned(),
        enum_values: schema
            .get("enum")
            .and_then(Value::as_array)
            .cloned()
            .unwrap_or_default(),
    }))
}

/// Picks the JSON media type out of a `content` map, falling back to the
/// first entry when nothing is explicitly JSON.
fn json_content_schema(owner: &Value) -> Option<&Value> {
    let content = owner.get("content").and_then(Value::as_object)?;
    let media = content
        .iter()
        .find(|(k, _)| k.starts_with("application/json") || k.ends_with("+json"))
        .map(|(_, v)| v)
        .or_else(|| content.values().next())?;
    media.get("schema")
}

fn content_example(owner: &Value) -> Option<Value> {
    let content = owner.get("content").and_then(Value::as_object)?;
    let media = content
        .iter()
        .find(|(k, _)| k.starts_with("application/json") || k.ends_with("+json"))
        .map(|(_, v)| v)
        .or_else(|| content.values().next())?;
    if let Some(example) = media.get("example") {
        return Some(example.clone());
    }
    media
        .get("examples")
        .and_then(Value::as_object)
        .and_then(|m| m.values().next())
        .and_then(|v| v.get("value"))
        .cloned()
}

fn primitive_name(node: &SchemaNode) -> String {
    match node {
        SchemaNode::Primitive { primitive, .. } => primitive.clone(),
        SchemaNode::Array { .. } => "array".into(),
        SchemaNode::Object { .. } => "object".into(),
        SchemaNode::Empty | SchemaNode::Recursive => "string".into(),
    }
}

fn node_description(node: &SchemaNode) -> String {
    match node {
        SchemaNode::Object { description, .. }
        | SchemaNode::Array { description, .. }
        | SchemaNode::Primitive { description, .. } => description.clone().unwrap_or_default(),
        _ => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal_doc() -> Value {
        json!({
            "openapi": "3.0.3",
            "info": {"title": "movies", "version": "1"},
            "servers": [{"url": "https://api.example.org/3/"}],
            "paths": {
                "/search/person": {
                    "get": {
                        "summary": "Search for people by their name.",
                        "parameters": [
                            {"name": "query", "in": "query", "required": true,
                             "description": "Text to search for.",
                             "schema": {"type": "string"}},
                            {"name": "page", "in": "query",
                             "schema": {"type": "integer", "default": 1}},
                            {"name": "X-Trace", "in": "header", "schema": {"type": "string"}}
                        ],
                        "responses": {
                            "200": {
                                "description": "A page of person results.",
                                "content": {"application/json": {"schema": {
                                    "$ref": "#/components/schemas/PersonPage"
                                }}}
                            },
                            "401": {"description": "Invalid API key."}
                        }
                    }
                }
            },
            "components": {"schemas": {
                "PersonPage": {
                    "type": "object",
                    "properties": {
                        "page": {"type": "integer"},
                        "results": {"type": "array", "items": {"$ref": "#/components/schemas/Person"}}
                    }
                },
                "Person": {
                    "type": "object",
                    "properties": {
                        "id": {"type": "integer", "description": "The person id."},
                        "name": {"type": "string"}
                    }
                }
            }}
        })
    }

    #[test]
    fn loads_endpoint_with_resolved_refs() {
        let catalog = from_document("movies", &minimal_doc()).unwrap();
        assert_eq!(catalog.base_url, "https://api.example.org/3");
        assert_eq!(catalog.endpoints.len(), 1);
        let ep = &catalog.endpoints[0];
        assert_eq!(ep.label(), "GET /search/person");
        // The header parameter is dropped; path/query ones survive.
        assert_eq!(ep.parameters.len(), 2);
        assert_eq!(ep.parameters[0].name, "query");
        assert!(ep.parameters[0].required);
        assert_eq!(ep.parameters[1].default, Some(json!(1)));
        let SchemaNode::Object { properties, .. } = &ep.response_schema else {
            panic!("expected object schema");
        };
        let SchemaNode::Array { items, .. } = &properties["results"] else {
            panic!("expected array of persons");
        };
        let SchemaNode::Object { properties, .. } = items.as_ref() else {
            panic!("expected person object");
        };
        assert!(properties.contains_key("id"));
        assert_eq!(ep.error_docs.len(), 1);
        assert_eq!(ep.error_docs[0].status, "401");
    }

    #[test]
    fn rejects_version_2_documents() {
        let doc = json!({"swagger": "2.0", "paths": {}});
        assert!(matches!(
            from_document("x", &doc),
            Err(CatalogError::UnsupportedVersion { .. })
        ));
        let doc = json!({"openapi": "2.0.0", "paths": {}});
        assert!(matches!(
            from_document("x", &doc),
            Err(CatalogError::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn dangling_ref_is_an_error() {
        let mut doc = minimal_doc();
        doc["paths"]["/search/person"]["get"]["responses"]["200"]["content"]
            ["application/json"]["schema"] = json!({"$ref": "#/components/schemas/Missing"});
        assert!(matches!(
            from_document("x", &doc),
            Err(CatalogError::UnresolvableRef { reference }) if reference.contains("Missing")
        ));
    }

    #[test]
    fn self_referential_schema_collapses_to_recursive_marker() {
        let doc = json!({
            "openapi": "3.1.0",
            "servers": [{"url": "https://api.example.org"}],
            "paths": {"/tree": {"get": {"responses": {"200": {
                "description": "ok",
                "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Node"}}}
            }}}}},
            "components": {"schemas": {"Node": {
                "type": "object",
                "properties": {
                    "value": {"type": "string"},
                    "child": {"$ref": "#/components/schemas/Node"}
                }
            }}}
        });
        let catalog = from_document("tree", &doc).unwrap();
        let mut node = &catalog.endpoints[0].response_schema;
        let mut hops = 0;
        loop {
            match node {
                SchemaNode::Object { properties, .. } => {
                    node = &properties["child"];
                    hops += 1;
                }
                SchemaNode::Recursive => break,
                other => panic!("unexpected node {other:?} after {hops} hops"),
            }
            assert!(hops <= REF_DEPTH_CAP, "no recursion cut applied");
        }
    }

    #[test]
    fn missing_response_schema_is_empty_marker() {
        let doc = json!({
            "openapi": "3.0.0",
            "servers": [{"url": "https://api.example.org/v1"}],
            "paths": {"/me/player/next": {"post": {
                "summary": "Skips to next track in the user's queue.",
                "responses": {"204": {"description": "Command sent."}}
            }}}
        });
        let catalog = from_document("music", &doc).unwrap();
        assert!(catalog.endpoints[0].response_schema.is_empty());
    }

    #[test]
    fn body_properties_become_body_parameters() {
        let doc = json!({
            "openapi": "3.0.0",
            "servers": [{"url": "https://api.example.org/v1"}],
            "paths": {"/playlists/{playlist_id}/tracks": {"post": {
                "summary": "Add one or more items to a user's playlist.",
                "parameters": [{"name": "playlist_id", "in": "path", "schema": {"type": "string"}}],
                "requestBody": {
                    "required": true,
                    "content": {"application/json": {"schema": {
                        "type": "object",
                        "required": ["uris"],
                        "properties": {
                            "uris": {"type": "array", "items": {"type": "string"}},
                            "position": {"type": "integer"}
                        }
                    }}}
                },
                "responses": {"201": {"description": "Created.", "content": {
                    "application/json": {"schema": {"type": "object", "properties": {
                        "snapshot_id": {"type": "string"}
                    }}}
                }}}
            }}}
        });
        let catalog = from_document("music", &doc).unwrap();
        let ep = &catalog.endpoints[0];
        let uris = ep.parameters.iter().find(|p| p.name == "uris").unwrap();
        assert_eq!(uris.location, ParamLocation::Body);
        assert_eq!(uris.data_type, "array");
        assert!(uris.required);
        let position = ep.parameters.iter().find(|p| p.name == "position").unwrap();
        assert!(!position.required);
        assert!(ep.request_body_schema.is_some());
        let path_param = ep.parameters.iter().find(|p| p.name == "playlist_id").unwrap();
        assert!(path_param.required, "path parameters are always required");
    }

    #[test]
    fn empty_documents_are_rejected() {
        let doc = json!({
            "openapi": "3.0.0",
            "servers": [{"url": "https://api.example.org"}],
            "paths": {}
        });
        assert!(matches!(
            from_document("x", &doc),
            Err(CatalogError::MalformedDocument { .. })
        ));
    }

    #[test]
    fn yaml_and_json_text_both_parse() {
        let yaml = r#"
openapi: "3.0.0"
servers:
  - url: https://api.example.org/v1
paths:
  /me:
    get:
      summary: Get the current user's profile.
      responses:
        "200":
          description: A user.
          content:
            application/json:
              schema:
                type: object
                properties:
                  id: {type: string}
"#;
        let catalog = parse_catalog("music", yaml).unwrap();
        assert_eq!(catalog.endpoints[0].label(), "GET /me");
        let json_text = serde_json::to_string(&minimal_doc()).unwrap();
        assert!(parse_catalog("movies", &json_text).is_ok());
    }
}
