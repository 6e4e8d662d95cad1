use indexmap::IndexMap;
use thiserror::Error;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    TooFewKeywords(usize),
    UnknownKeyword(String),
    Malformed(String),
    Unbalanced(char),
    UnterminatedString,
    UnexpectedChar(char),
}

/// Parse failure; `offset` counts characters from the start of the command.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{} at offset {offset}", describe(.kind))]
pub struct CommandParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::TooFewKeywords(n) => {
            format!("a command needs at least three keywords, found {n}")
        }
        ParseErrorKind::UnknownKeyword(k) => format!("unknown keyword `{k}`"),
        ParseErrorKind::Malformed(m) => m.clone(),
        ParseErrorKind::Unbalanced(c) => format!("unbalanced `{c}`"),
        ParseErrorKind::UnterminatedString => "unterminated string".to_string(),
        ParseErrorKind::UnexpectedChar(c) => format!("unexpected character `{c}`"),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(usize),
    Dot,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Eq,
    Comma,
    Colon,
    End,
}

fn err(offset: usize, kind: ParseErrorKind) -> CommandParseError {
    CommandParseError { offset, kind }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, CommandParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '.' => Tok::Dot,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '=' => Tok::Eq,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(start, ParseErrorKind::UnterminatedString)),
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e) => s.push(e),
                                None => return Err(err(start, ParseErrorKind::UnterminatedString)),
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[i..j].iter().collect();
                let n = digits
                    .parse()
                    .map_err(|_| err(start, ParseErrorKind::Malformed("index out of range".into())))?;
                toks.push((start, Tok::Int(n)));
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                toks.push((start, Tok::Ident(chars[i..j].iter().collect())));
                i = j;
                continue;
            }
            other => return Err(err(start, ParseErrorKind::UnexpectedChar(other))),
        };
        toks.push((start, tok));
        i += 1;
    }
    toks.push((chars.len(), Tok::End));
    Ok(toks)
}

fn check_brackets(toks: &[(usize, Tok)]) -> Result<(), CommandParseError> {
    let mut stack: Vec<(usize, char)> = Vec::new();
    for (off, t) in toks {
        match t {
            Tok::LBracket => stack.push((*off, '[')),
            Tok::LBrace => stack.push((*off, '{')),
            Tok::RBracket | Tok::RBrace => {
                let (close, open) = if *t == Tok::RBracket { (']', '[') } else { ('}', '{') };
                match stack.pop() {
                    Some((_, o)) if o == open => {}
                    _ => return Err(err(*off, ParseErrorKind::Unbalanced(close))),
                }
            }
            _ => {}
        }
    }
    match stack.pop() {
        Some((off, open)) => Err(err(off, ParseErrorKind::Unbalanced(open))),
        None => Ok(()),
    }
}

/// Identifiers outside any brackets.
fn count_keywords(toks: &[(usize, Tok)]) -> usize {
    let mut depth = 0usize;
    let mut count = 0;
    for (_, t) in toks {
        match t {
            Tok::LBracket | Tok::LBrace => depth += 1,
            Tok::RBracket | Tok::RBrace => depth = depth.saturating_sub(1),
            Tok::Ident(_) if depth == 0 => count += 1,
            _ => {}
        }
    }
    count
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn malformed(&self, msg: impl Into<String>) -> CommandParseError {
        err(self.offset(), ParseErrorKind::Malformed(msg.into()))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), CommandParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.malformed(format!("expected {what}")))
        }
    }

    fn keyword(&mut self, expected: &str) -> Result<(usize, String), CommandParseError> {
        let off = self.offset();
        match self.bump() {
            Tok::Ident(k) => Ok((off, k)),
            _ => Err(err(off, ParseErrorKind::Malformed(format!("expected {expected}")))),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, CommandParseError> {
        let off = self.offset();
        match self.bump() {
            Tok::Str(s) => Ok(s),
            _ => Err(err(off, ParseErrorKind::Malformed(format!("expected quoted {what}")))),
        }
    }

    fn bracketed_string(&mut self, what: &str) -> Result<String, CommandParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let s = self.string(what)?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(s)
    }

    fn index(&mut self) -> Result<Option<usize>, CommandParseError> {
        if *self.peek() != Tok::LBracket {
            return Ok(None);
        }
        self.bump();
        let off = self.offset();
        let n = match self.bump() {
            Tok::Int(n) => n,
            _ => return Err(err(off, ParseErrorKind::Malformed("expected integer index".into()))),
        };
        self.expect(Tok::RBracket, "`]`")?;
        Ok(Some(n))
    }

    fn source(&mut self) -> Result<Source, CommandParseError> {
        let (off, k) = self.keyword("THIS or CONNECTED")?;
        match k.as_str() {
            "THIS" => Ok(Source::This),
            "CONNECTED" => Ok(Source::Connected(self.selector()?)),
            _ => Err(err(off, ParseErrorKind::UnknownKeyword(k))),
        }
    }

    fn selector(&mut self) -> Result<ConnectedSelector, CommandParseError> {
        let mut sel = ConnectedSelector::default();
        if *self.peek() != Tok::LBracket {
            return Ok(sel);
        }
        self.bump();
        let mut seen = Vec::new();
        if *self.peek() == Tok::RBracket {
            self.bump();
            return Ok(sel);
        }
        loop {
            let (off, key) = self.keyword("selector key")?;
            if seen.contains(&key) {
                return Err(err(off, ParseErrorKind::Malformed(format!("duplicate selector key `{key}`"))));
            }
            self.expect(Tok::Eq, "`=`")?;
            match key.as_str() {
                "Name" => sel.name = Some(self.string("name")?),
                "StereotypeName" => sel.stereotype_name = Some(self.string("stereotype name")?),
                "OUTPUT_Name" => sel.output_name = Some(self.string("output name")?),
                "Nr" => {
                    let off = self.offset();
                    sel.nr = match self.bump() {
                        Tok::Int(n) => n,
                        _ => return Err(err(off, ParseErrorKind::Malformed("expected integer for Nr".into()))),
                    }
                }
                "AttributeValue" => sel.attribute_value = Some(self.attribute_map()?),
                _ => {
                    return Err(err(
                        off,
                        ParseErrorKind::Malformed(format!("unknown selector key `{key}`")),
                    ))
                }
            }
            seen.push(key);
            match self.bump() {
                Tok::Comma => continue,
                Tok::RBracket => return Ok(sel),
                _ => return Err(err(self.toks[self.pos - 1].0, ParseErrorKind::Malformed("expected `,` or `]`".into()))),
            }
        }
    }

    fn attribute_map(&mut self) -> Result<IndexMap<String, String>, CommandParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut map = IndexMap::new();
        if *self.peek() == Tok::RBrace {
            self.bump();
            return Ok(map);
        }
        loop {
            let off = self.offset();
            let key = self.string("attribute name")?;
            self.expect(Tok::Colon, "`:`")?;
            let value = self.string("attribute value")?;
            if map.insert(key.clone(), value).is_some() {
                return Err(err(off, ParseErrorKind::Malformed(format!("duplicate attribute `{key}`"))));
            }
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrace => {
                    self.bump();
                    return Ok(map);
                }
                _ => return Err(self.malformed("expected `,` or `}`")),
            }
        }
    }

    fn scope(&mut self) -> Result<Scope, CommandParseError> {
        let (off, k) = self.keyword("BLOCK or STEREOTYPE")?;
        match k.as_str() {
            "BLOCK" => Ok(Scope::Block),
            "STEREOTYPE" => Ok(Scope::Stereotype(self.bracketed_string("stereotype name")?)),
            _ => Err(err(off, ParseErrorKind::UnknownKeyword(k))),
        }
    }

    fn accessor(&mut self) -> Result<Accessor, CommandParseError> {
        let (off, k) = self.keyword("NAME, ATTRIBUTES, STEREOTYPEofATTRIBUTE or OUTPUT")?;
        match k.as_str() {
            "NAME" => Ok(Accessor::Name),
            "ATTRIBUTES" => Ok(Accessor::Attributes),
            "STEREOTYPEofATTRIBUTE" => Ok(Accessor::StereotypeOfAttribute(
                self.bracketed_string("attribute name")?,
            )),
            "OUTPUT" => Ok(Accessor::Output),
            _ => Err(err(off, ParseErrorKind::UnknownKeyword(k))),
        }
    }

    fn step(&mut self) -> Result<StepKind, CommandParseError> {
        let (off, k) = self.keyword("ATTRIBUTES, STEREOTYPEofATTRIBUTE or NAME")?;
        match k.as_str() {
            "ATTRIBUTES" => Ok(StepKind::Attributes),
            "STEREOTYPEofATTRIBUTE" => Ok(StepKind::StereotypeOfAttribute(
                self.bracketed_string("attribute name")?,
            )),
            "NAME" => Ok(StepKind::Name),
            "OUTPUT" | "BLOCK" | "STEREOTYPE" | "THIS" | "CONNECTED" => Err(err(
                off,
                ParseErrorKind::Malformed(format!("`{k}` cannot follow a chain step")),
            )),
            _ => Err(err(off, ParseErrorKind::UnknownKeyword(k))),
        }
    }
}

pub fn parse_command(text: &str) -> Result<CommandAst, CommandParseError> {
    let toks = lex(text)?;
    check_brackets(&toks)?;
    let keywords = count_keywords(&toks);
    if keywords < 3 {
        return Err(err(text.chars().count(), ParseErrorKind::TooFewKeywords(keywords)));
    }
    let mut p = Parser { toks, pos: 0 };
    let source = p.source()?;
    p.expect(Tok::Dot, "`.`")?;
    let scope = p.scope()?;
    p.expect(Tok::Dot, "`.`")?;
    let accessor = p.accessor()?;
    let accessor_index = p.index()?;
    let mut chain: Vec<ChainStep> = Vec::new();
    let mut can_chain = accessor.allows_chain();
    while *p.peek() == Tok::Dot {
        if !can_chain {
            return Err(p.malformed("only ATTRIBUTES or STEREOTYPEofATTRIBUTE can be followed by another keyword"));
        }
        p.bump();
        let kind = p.step()?;
        let index = p.index()?;
        can_chain = kind != StepKind::Name;
        chain.push(ChainStep { kind, index });
    }
    if *p.peek() != Tok::End {
        return Err(p.malformed("unexpected trailing input"));
    }
    Ok(CommandAst {
        source,
        scope,
        accessor,
        accessor_index,
        chain,
    })
}
