//! Hand-rolled single-line parser for extraction programs.

use super::{CmpOp, ExtractError, ExtractionProgram, FieldPath, FormatPiece, Literal, PathStep, Stage};

pub fn parse_program(text: &str) -> Result<ExtractionProgram, ExtractError> {
    let mut lex = Lexer::new(text.trim());
    let source = parse_path(&mut lex)?;
    let mut stages = Vec::new();
    loop {
        lex.skip_ws();
        if lex.done() {
            break;
        }
        lex.expect('|')?;
        stages.push(parse_stage(&mut lex)?);
    }
    Ok(ExtractionProgram {
        source,
        stages,
        text: text.trim().to_string(),
    })
}

fn parse_stage(lex: &mut Lexer<'_>) -> Result<Stage, ExtractError> {
    lex.skip_ws();
    let word = lex.ident().ok_or_else(|| lex.err("expected a stage name"))?;
    match word.as_str() {
        "filter" => {
            let path = parse_path(lex)?;
            let op = parse_op(lex)?;
            let literal = parse_literal(lex)?;
            Ok(Stage::Filter { path, op, literal })
        }
        "sort" => {
            let path = parse_path(lex)?;
            lex.skip_ws();
            let mut descending = false;
            let rollback = lex.pos;
            if let Some(word) = lex.ident() {
                match word.as_str() {
                    "desc" => descending = true,
                    "asc" => {}
                    _ => lex.pos = rollback,
                }
            }
            Ok(Stage::Sort { path, descending })
        }
        "first" => {
            lex.skip_ws();
            let count = match lex.number() {
                Some(n) if n >= 1.0 && n.fract() == 0.0 => n as usize,
                Some(_) => return Err(lex.err("first needs a positive whole number")),
                None => 1,
            };
            Ok(Stage::First { count })
        }
        "count" => Ok(Stage::Count),
        "map" => Ok(Stage::Map {
            path: parse_path(lex)?,
        }),
        "join" => {
            lex.skip_ws();
            let separator = match lex.peek() {
                Some('"') => lex.string()?,
                _ => ", ".to_string(),
            };
            Ok(Stage::Join { separator })
        }
        "format" => {
            lex.skip_ws();
            let raw = lex.string()?;
            Ok(Stage::Format {
                pieces: parse_format(&raw)?,
            })
        }
        other => Err(lex.err(&format!("unknown stage '{other}'"))),
    }
}

fn parse_op(lex: &mut Lexer<'_>) -> Result<CmpOp, ExtractError> {
    lex.skip_ws();
    for (text, op) in [
        ("==", CmpOp::Eq),
        ("!=", CmpOp::Ne),
        (">=", CmpOp::Ge),
        ("<=", CmpOp::Le),
        (">", CmpOp::Gt),
        ("<", CmpOp::Lt),
    ] {
        if lex.eat_str(text) {
            return Ok(op);
        }
    }
    Err(lex.err("expected a comparison operator"))
}

fn parse_literal(lex: &mut Lexer<'_>) -> Result<Literal, ExtractError> {
    lex.skip_ws();
    match lex.peek() {
        Some('"') => Ok(Literal::Str(lex.string()?)),
        Some(c) if c.is_ascii_digit() || c == '-' => {
            let n = lex.number().ok_or_else(|| lex.err("bad number"))?;
            Ok(Literal::Num(n))
        }
        _ => {
            let word = lex.ident().ok_or_else(|| lex.err("expected a literal"))?;
            match word.as_str() {
                "true" => Ok(Literal::Bool(true)),
                "false" => Ok(Literal::Bool(false)),
                "null" => Ok(Literal::Null),
                other => Err(lex.err(&format!("unknown literal '{other}'"))),
            }
        }
    }
}

/// `a.b[0].c`, `[0].a`, or `.` for the whole value.
fn parse_path(lex: &mut Lexer<'_>) -> Result<FieldPath, ExtractError> {
    lex.skip_ws();
    let mut steps = Vec::new();
    if lex.peek() == Some('.') {
        // A bare dot addresses the root; it cannot start a longer path.
        lex.next();
        lex.skip_ws();
        match lex.peek() {
            None | Some('|') => return Ok(FieldPath::default()),
            _ => return Err(lex.err("a path starting with '.' must be '.' alone")),
        }
    }
    loop {
        match lex.peek() {
            Some('[') => {
                lex.next();
                lex.skip_ws();
                let n = lex.number().ok_or_else(|| lex.err("expected an index"))?;
                if n < 0.0 || n.fract() != 0.0 {
                    return Err(lex.err("array indexes are non-negative whole numbers"));
                }
                lex.skip_ws();
                lex.expect(']')?;
                steps.push(PathStep::Index(n as usize));
            }
            _ => {
                let Some(name) = lex.ident() else {
                    break;
                };
                steps.push(PathStep::Field(name));
            }
        }
        match lex.peek() {
            Some('.') => {
                lex.next();
                if lex.ident_start() {
                    continue;
                }
                return Err(lex.err("expected a field name after '.'"));
            }
            Some('[') => continue,
            _ => break,
        }
    }
    if steps.is_empty() {
        return Err(lex.err("expected a path"));
    }
    Ok(FieldPath { steps })
}

/// Splits `"...{}...{a.b}..."` content into text and hole pieces. Literal
/// braces are not supported inside format templates; holes are short paths.
fn parse_format(raw: &str) -> Result<Vec<FormatPiece>, ExtractError> {
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '{' {
            text.push(c);
            continue;
        }
        if !text.is_empty() {
            pieces.push(FormatPiece::Text(std::mem::take(&mut text)));
        }
        let mut inner = String::new();
        loop {
            match chars.next() {
                Some('}') => break,
                Some(c) => inner.push(c),
                None => {
                    return Err(ExtractError::ProgramParseError {
                        detail: "unclosed '{' in format template".into(),
                    })
                }
            }
        }
        if inner.is_empty() {
            pieces.push(FormatPiece::Hole(FieldPath::default()));
        } else {
            let mut sub = Lexer::new(&inner);
            let path = parse_path(&mut sub)?;
            sub.skip_ws();
            if !sub.done() {
                return Err(ExtractError::ProgramParseError {
                    detail: format!("bad format hole '{{{inner}}}'"),
                });
            }
            pieces.push(FormatPiece::Hole(path));
        }
    }
    if !text.is_empty() {
        pieces.push(FormatPiece::Text(text));
    }
    Ok(pieces)
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn done(&self) -> bool {
        self.pos >= self.text.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn next(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.next();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExtractError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.next();
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn ident_start(&self) -> bool {
        self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        if !self.ident_start() {
            return None;
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            self.next();
        }
        Some(self.text[start..self.pos].to_string())
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('-') {
            self.next();
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.next();
        }
        if self.pos == start {
            return None;
        }
        self.text[start..self.pos].parse().ok()
    }

    fn string(&mut self) -> Result<String, ExtractError> {
        self.skip_ws();
        if self.peek() != Some('"') {
            return Err(self.err("expected a double-quoted string"));
        }
        self.next();
        let mut out = String::new();
        loop {
            match self.next() {
                Some('"') => return Ok(out),
                Some('\\') => match self.next() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c @ ('"' | '\\')) => out.push(c),
                    _ => return Err(self.err("bad escape in string")),
                },
                Some(c) => out.push(c),
                None => return Err(self.err("unterminated string")),
            }
        }
    }

    fn err(&self, detail: &str) -> ExtractError {
        let tail: String = self.rest().chars().take(20).collect();
        ExtractError::ProgramParseError {
            detail: format!("{detail} at '{tail}'"),
        }
    }
}
