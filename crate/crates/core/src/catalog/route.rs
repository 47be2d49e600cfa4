//! Route templates (`/person/{person_id}/movie_credits`) and matching of
//! concrete request paths against them.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CatalogError;

/// One segment of a route template: a fixed literal or a `{variable}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Variable(String),
}

/// A parsed route template. The raw text is kept verbatim so templates
/// round-trip through serialization unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteTemplate {
    raw: String,
    segments: Vec<Segment>,
}

impl RouteTemplate {
    /// Parses and validates a template. Rules: must start with `/`, every
    /// `{var}` occupies a whole segment, variable names are nonempty and
    /// unique within the template.
    pub fn parse(raw: &str) -> Result<Self, CatalogError> {
        if !raw.starts_with('/') {
            return Err(CatalogError::MalformedRouteTemplate {
                template: raw.to_string(),
                reason: "must start with '/'".into(),
            });
        }
        let mut segments = Vec::new();
        let mut seen = BTreeSet::new();
        for part in raw[1..].split('/') {
            if part.starts_with('{') && part.ends_with('}') && part.len() > 2 {
                let name = &part[1..part.len() - 1];
                if name.contains(['{', '}']) {
                    return Err(CatalogError::MalformedRouteTemplate {
                        template: raw.to_string(),
                        reason: format!("nested braces in segment '{part}'"),
                    });
                }
                if !seen.insert(name.to_string()) {
                    return Err(CatalogError::MalformedRouteTemplate {
                        template: raw.to_string(),
                        reason: format!("duplicate variable '{name}'"),
                    });
                }
                segments.push(Segment::Variable(name.to_string()));
            } else if part.contains(['{', '}']) {
                return Err(CatalogError::MalformedRouteTemplate {
                    template: raw.to_string(),
                    reason: format!("braces must span a whole segment, got '{part}'"),
                });
            } else {
                segments.push(Segment::Literal(part.to_string()));
            }
        }
        Ok(Self {
            raw: raw.to_string(),
            segments,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Variable(name) => Some(name.as_str()),
                Segment::Literal(_) => None,
            })
            .collect()
    }

    /// Number of literal segments; the specificity score used to break
    /// overlaps like `/movie/latest` vs `/movie/{movie_id}`.
    pub fn literal_count(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| matches!(s, Segment::Literal(_)))
            .count()
    }

    /// Matches a concrete path segment-wise. A variable consumes exactly one
    /// nonempty segment. Returns the variable bindings on success.
    pub fn match_path(&self, concrete: &str) -> Option<Vec<(String, String)>> {
        let concrete = concrete.strip_prefix('/')?;
        let parts: Vec<&str> = concrete.split('/').collect();
        if parts.len() != self.segments.len() {
            return None;
        }
        let mut bindings = Vec::new();
        for (seg, part) in self.segments.iter().zip(&parts) {
            match seg {
                Segment::Literal(lit) => {
                    if lit != part {
                        return None;
                    }
                }
                Segment::Variable(name) => {
                    if part.is_empty() {
                        return None;
                    }
                    bindings.push((name.clone(), part.to_string()));
                }
            }
        }
        Some(bindings)
    }

    /// Substitutes variables to produce a concrete path.
    pub fn instantiate(&self, values: &dyn Fn(&str) -> String) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            out.push('/');
            match seg {
                Segment::Literal(lit) => out.push_str(lit),
                Segment::Variable(name) => out.push_str(&values(name)),
            }
        }
        out
    }
}

impl fmt::Display for RouteTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl Serialize for RouteTemplate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for RouteTemplate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        RouteTemplate::parse(&raw).map_err(serde::de::Error::custom)
    }
}
