//! Text projections of the catalog for each model role. The selector sees
//! one line per endpoint and nothing else; the caller sees full docs for the
//! endpoints its plan names; the parser sees the response schema.

use std::fmt::Write as _;

use super::{
    extract_route_mentions, ApiCatalog, CatalogError, EndpointSpec, ParamLocation, ParameterSpec,
    SchemaNode,
};

/// Hard cap on a digest line; endpoint descriptions can run to paragraphs.
const DIGEST_LINE_CAP: usize = 160;

impl ApiCatalog {
    /// One line per endpoint: `METHOD /route: first sentence`. Carries no
    /// parameter or schema text; that detail is withheld until an endpoint
    /// is actually chosen.
    pub fn selector_digest(&self) -> String {
        let mut out = String::new();
        for ep in &self.endpoints {
            let sentence = first_sentence(&ep.description);
            let mut line = format!("{} {}: {}", ep.method, ep.route, sentence);
            if line.chars().count() > DIGEST_LINE_CAP {
                line = line.chars().take(DIGEST_LINE_CAP - 3).collect::<String>() + "...";
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Full documentation for exactly the endpoints the API plan mentions,
    /// in mention order. Fails when the plan names nothing in the catalog.
    pub fn caller_docs_for_plan(&self, plan: &str) -> Result<String, CatalogError> {
        let mut chosen: Vec<&EndpointSpec> = Vec::new();
        for (method, path) in extract_route_mentions(plan) {
            if let Some(ep) = self.resolve_mention(method, &path) {
                if !chosen.iter().any(|c| std::ptr::eq(*c, ep)) {
                    chosen.push(ep);
                }
            }
        }
        if chosen.is_empty() {
            return Err(CatalogError::NoEndpointMentioned {
                plan: plan.to_string(),
            });
        }
        let blocks: Vec<String> = chosen.iter().map(|ep| endpoint_docs(ep)).collect();
        Ok(blocks.join("\n"))
    }
}

/// Caller-facing documentation for one endpoint. Deliberately excludes the
/// response schema: distilling responses is the parser's job.
pub fn endpoint_docs(ep: &EndpointSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Endpoint: {}", ep.label());
    let desc = if ep.description.is_empty() {
        "(no description)"
    } else {
        &ep.description
    };
    let _ = writeln!(out, "Description: {desc}");
    let non_body: Vec<&ParameterSpec> = ep
        .parameters
        .iter()
        .filter(|p| p.location != ParamLocation::Body)
        .collect();
    if non_body.is_empty() {
        let _ = writeln!(out, "Parameters: none");
    } else {
        let _ = writeln!(out, "Parameters:");
        for p in non_body {
            let _ = writeln!(out, "{}", param_line(p));
        }
    }
    if ep.request_body_schema.is_some() {
        let _ = writeln!(out, "Request body (JSON):");
        let body_params: Vec<&ParameterSpec> = ep
            .parameters
            .iter()
            .filter(|p| p.location == ParamLocation::Body)
            .collect();
        if body_params.is_empty() {
            let _ = writeln!(
                out,
                "{}",
                schema_text(ep.request_body_schema.as_ref().unwrap())
            );
        } else {
            for p in body_params {
                let _ = writeln!(out, "{}", param_line(p));
            }
        }
    }
    out
}

/// `- name (location, type, required|optional[, default=..]): description`
pub fn param_line(p: &ParameterSpec) -> String {
    let location = match p.location {
        ParamLocation::Path => "path",
        ParamLocation::Query => "query",
        ParamLocation::Body => "body",
    };
    let necessity = if p.required { "required" } else { "optional" };
    let mut line = format!("- {} ({location}, {}, {necessity}", p.name, p.data_type);
    if let Some(default) = &p.default {
        let _ = write!(line, ", default={default}");
    }
    line.push(')');
    if !p.enum_values.is_empty() {
        let values: Vec<String> = p.enum_values.iter().map(|v| v.to_string()).collect();
        let _ = write!(line, " one of [{}]", values.join(", "));
    }
    if !p.description.is_empty() {
        let _ = write!(line, ": {}", p.description);
    }
    line
}

/// One-line summary of an endpoint's parameters, used in parser prompts.
pub fn params_summary(ep: &EndpointSpec) -> String {
    if ep.parameters.is_empty() {
        return "none".to_string();
    }
    ep.parameters
        .iter()
        .map(|p| format!("{} ({})", p.name, p.data_type))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders a schema as indented pseudo-JSON with type names in value
/// position and field descriptions as trailing comments.
pub fn schema_text(node: &SchemaNode) -> String {
    let mut out = String::new();
    render_schema(node, 0, &mut out);
    out
}

fn render_schema(node: &SchemaNode, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match node {
        SchemaNode::Object { properties, .. } => {
            if properties.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let last = properties.len() - 1;
            for (i, (name, sub)) in properties.iter().enumerate() {
                let _ = write!(out, "{pad}  \"{name}\": ");
                render_schema(sub, indent + 1, out);
                if i != last {
                    out.push(',');
                }
                if let Some(desc) = leaf_description(sub) {
                    let _ = write!(out, "  // {}", first_sentence(&desc));
                }
                out.push('\n');
            }
            let _ = write!(out, "{pad}}}");
        }
        SchemaNode::Array { items, .. } => {
            out.push_str("[\n");
            let _ = write!(out, "{pad}  ");
            render_schema(items, indent + 1, out);
            out.push('\n');
            let _ = write!(out, "{pad}]");
        }
        SchemaNode::Primitive { primitive, .. } => out.push_str(primitive),
        SchemaNode::Empty => out.push_str("(no schema)"),
        SchemaNode::Recursive => out.push_str("(recursive)"),
    }
}

fn leaf_description(node: &SchemaNode) -> Option<String> {
    match node {
        SchemaNode::Primitive { description, .. } => description.clone().filter(|d| !d.is_empty()),
        _ => None,
    }
}

/// Text up to and including the first sentence-ending period, or the whole
/// text when none is found. Empty descriptions get a placeholder.
pub fn first_sentence(text: &str) -> String {
    let text = text.trim().replace('\n', " ");
    if text.is_empty() {
        return "(no description)".to_string();
    }
    match text.find(". ") {
        Some(idx) => text[..=idx].to_string(),
        None => text,
    }
}
