//! Role prompt templates. Templates are editable TOML assets with `{slot}`
//! placeholders; literal braces are written `{{` and `}}`. Each role also
//! carries worked examples loaded from plain text files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{GatewayError, Role};

#[derive(Debug, Clone, Deserialize)]
pub struct RolePromptTemplate {
    pub role: Role,
    pub template: String,
    #[serde(default)]
    pub stop_sequences: Vec<String>,
}

impl RolePromptTemplate {
    pub fn from_toml(text: &str) -> Result<Self, GatewayError> {
        toml::from_str(text).map_err(|e| GatewayError::MalformedTemplate {
            detail: e.to_string(),
        })
    }

    /// The slot names this template references, after brace unescaping.
    pub fn placeholders(&self) -> Result<Vec<String>, GatewayError> {
        let mut names = Vec::new();
        scan(&self.template, &mut |piece| {
            if let Piece::Slot(name) = piece {
                if !names.iter().any(|n| n == name) {
                    names.push(name.to_string());
                }
            }
        })?;
        Ok(names)
    }
}

pub type Slots<'a> = BTreeMap<&'a str, String>;

/// Fills a template's placeholders. Every placeholder must have a slot value
/// and malformed brace syntax is rejected rather than passed through.
pub fn render_prompt(
    template: &RolePromptTemplate,
    slots: &Slots<'_>,
) -> Result<String, GatewayError> {
    let mut out = String::with_capacity(template.template.len());
    let mut missing: Option<String> = None;
    scan(&template.template, &mut |piece| match piece {
        Piece::Text(t) => out.push_str(t),
        Piece::Char(c) => out.push(c),
        Piece::Slot(name) => match slots.get(name) {
            Some(value) => out.push_str(value),
            None => {
                if missing.is_none() {
                    missing = Some(name.to_string());
                }
            }
        },
    })?;
    if let Some(name) = missing {
        return Err(GatewayError::MissingSlot {
            role: template.role,
            name,
        });
    }
    Ok(out)
}

enum Piece<'a> {
    Text(&'a str),
    Char(char),
    Slot(&'a str),
}

/// Single pass over template text, emitting literal pieces and slot names.
fn scan<'a>(text: &'a str, emit: &mut dyn FnMut(Piece<'a>)) -> Result<(), GatewayError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut literal_start = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => {
                emit(Piece::Text(&text[literal_start..i]));
                if bytes.get(i + 1) == Some(&b'{') {
                    emit(Piece::Char('{'));
                    i += 2;
                } else {
                    let rest = &text[i + 1..];
                    let end = rest.find('}').ok_or_else(|| snippet_err(text, i))?;
                    let name = &rest[..end];
                    if name.is_empty() || !is_identifier(name) {
                        return Err(snippet_err(text, i));
                    }
                    emit(Piece::Slot(name));
                    i += 1 + end + 1;
                }
                literal_start = i;
            }
            b'}' => {
                emit(Piece::Text(&text[literal_start..i]));
                if bytes.get(i + 1) == Some(&b'}') {
                    emit(Piece::Char('}'));
                    i += 2;
                    literal_start = i;
                } else {
                    return Err(snippet_err(text, i));
                }
            }
            _ => i += 1,
        }
    }
    emit(Piece::Text(&text[literal_start..]));
    Ok(())
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn snippet_err(text: &str, at: usize) -> GatewayError {
    let snippet: String = text[at..].chars().take(24).collect();
    GatewayError::UnknownPlaceholder { snippet }
}

/// The full set of role templates plus per-role worked examples.
#[derive(Debug, Clone)]
pub struct PromptSet {
    pub planner: RolePromptTemplate,
    pub selector: RolePromptTemplate,
    pub caller: RolePromptTemplate,
    pub parser: RolePromptTemplate,
    /// Direct-extraction prompt used when no program can run.
    pub parser_fallback: RolePromptTemplate,
    icl: BTreeMap<Role, String>,
}

/// Slots each template must declare, checked at load time so a broken edit
/// fails before any session starts.
fn required_slots(name: &str) -> &'static [&'static str] {
    match name {
        "planner" => &["icl_examples", "query", "scratchpad"],
        "selector" => &["endpoints", "icl_examples", "background", "plan", "scratchpad"],
        "caller" => &[
            "api_url",
            "api_docs",
            "icl_examples",
            "background",
            "api_plan",
            "scratchpad",
        ],
        "parser" => &[
            "api_path",
            "api_description",
            "api_param",
            "response_schema",
            "response_description",
            "icl_examples",
            "query",
        ],
        "parser_fallback" => &["response_body", "query"],
        _ => &[],
    }
}

const BUILTIN_PLANNER: &str = include_str!("../../assets/prompts/planner.toml");
const BUILTIN_SELECTOR: &str = include_str!("../../assets/prompts/selector.toml");
const BUILTIN_CALLER: &str = include_str!("../../assets/prompts/caller.toml");
const BUILTIN_PARSER: &str = include_str!("../../assets/prompts/parser.toml");
const BUILTIN_PARSER_FALLBACK: &str = include_str!("../../assets/prompts/parser_fallback.toml");
const BUILTIN_ICL_PLANNER: &str = include_str!("../../assets/prompts/icl/planner/01.txt");
const BUILTIN_ICL_SELECTOR: &str = include_str!("../../assets/prompts/icl/selector/01.txt");
const BUILTIN_ICL_CALLER: &str = include_str!("../../assets/prompts/icl/caller/01.txt");
const BUILTIN_ICL_PARSER: &str = include_str!("../../assets/prompts/icl/parser/01.txt");

impl PromptSet {
    pub fn builtin() -> Self {
        let set = Self {
            planner: RolePromptTemplate::from_toml(BUILTIN_PLANNER).expect("builtin planner"),
            selector: RolePromptTemplate::from_toml(BUILTIN_SELECTOR).expect("builtin selector"),
            caller: RolePromptTemplate::from_toml(BUILTIN_CALLER).expect("builtin caller"),
            parser: RolePromptTemplate::from_toml(BUILTIN_PARSER).expect("builtin parser"),
            parser_fallback: RolePromptTemplate::from_toml(BUILTIN_PARSER_FALLBACK)
                .expect("builtin parser fallback"),
            icl: BTreeMap::from([
                (Role::Planner, BUILTIN_ICL_PLANNER.trim().to_string()),
                (Role::Selector, BUILTIN_ICL_SELECTOR.trim().to_string()),
                (Role::Caller, BUILTIN_ICL_CALLER.trim().to_string()),
                (Role::Parser, BUILTIN_ICL_PARSER.trim().to_string()),
            ]),
        };
        set.validate().expect("builtin prompt set is valid");
        set
    }

    /// Loads overrides from a directory. Template files are `<name>.toml`,
    /// examples are `icl/<role>/*.txt` (sorted, joined by blank lines);
    /// anything absent falls back to the builtin.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let dir = dir.as_ref();
        let mut set = Self::builtin();
        let load = |name: &str, slot: &mut RolePromptTemplate| -> Result<(), GatewayError> {
            let path = dir.join(format!("{name}.toml"));
            if path.is_file() {
                *slot = RolePromptTemplate::from_toml(&std::fs::read_to_string(&path).map_err(
                    |e| GatewayError::MalformedTemplate {
                        detail: format!("{}: {e}", path.display()),
                    },
                )?)?;
            }
            Ok(())
        };
        load("planner", &mut set.planner)?;
        load("selector", &mut set.selector)?;
        load("caller", &mut set.caller)?;
        load("parser", &mut set.parser)?;
        load("parser_fallback", &mut set.parser_fallback)?;

        for role in [Role::Planner, Role::Selector, Role::Caller, Role::Parser] {
            let icl_dir = dir.join("icl").join(role.as_str());
            if icl_dir.is_dir() {
                let mut names: Vec<_> = std::fs::read_dir(&icl_dir)
                    .map_err(GatewayError::Io)?
                    .filter_map(|e| e.ok())
                    .map(|e| e.path())
                    .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                    .collect();
                names.sort();
                if names.is_empty() {
                    return Err(GatewayError::MalformedTemplate {
                        detail: format!("no examples in {}", icl_dir.display()),
                    });
                }
                let mut parts = Vec::new();
                for p in names {
                    parts.push(std::fs::read_to_string(&p)?.trim().to_string());
                }
                set.icl.insert(role, parts.join("\n\n"));
            }
        }
        set.validate()?;
        Ok(set)
    }

    /// Worked examples for a role; always nonempty.
    pub fn icl_examples(&self, role: Role) -> &str {
        self.icl.get(&role).map(String::as_str).unwrap_or("")
    }

    pub fn template_for(&self, role: Role) -> &RolePromptTemplate {
        match role {
            Role::Planner => &self.planner,
            Role::Selector => &self.selector,
            Role::Caller => &self.caller,
            Role::Parser => &self.parser,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        for (name, template) in [
            ("planner", &self.planner),
            ("selector", &self.selector),
            ("caller", &self.caller),
            ("parser", &self.parser),
            ("parser_fallback", &self.parser_fallback),
        ] {
            let mut found = template.placeholders()?;
            found.sort();
            let mut required: Vec<String> =
                required_slots(name).iter().map(|s| s.to_string()).collect();
            required.sort();
            if found != required {
                return Err(GatewayError::MalformedTemplate {
                    detail: format!(
                        "template '{name}' must use slots {required:?}, found {found:?}"
                    ),
                });
            }
        }
        for role in [Role::Planner, Role::Selector, Role::Caller, Role::Parser] {
            if self.icl_examples(role).is_empty() {
                return Err(GatewayError::MalformedTemplate {
                    detail: format!("no worked examples for role {role}"),
                });
            }
        }
        Ok(())
    }
}
