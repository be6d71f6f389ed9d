//! Deterministic Turtle writer and a reader for the subset it produces:
//! `@prefix`/`PREFIX`, IRIs, prefixed names, `a`, `;` and `,` lists, plain
//! string literals and integers.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use super::{BrickGraph, Literal, Term, Triple, RDF_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct TurtleSyntaxError {
    pub line: usize,
    pub reason: String,
}

/// A local name the writer may emit after `prefix:` without escapes.
pub(crate) fn is_plain_local(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// `<iri>` with characters that IRIREF forbids written as `\u` escapes.
pub(crate) fn write_iri(iri: &str) -> String {
    let mut out = String::from("<");
    for c in iri.chars() {
        if c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') {
            let _ = write!(out, "\\u{:04X}", c as u32);
        } else {
            out.push(c);
        }
    }
    out.push('>');
    out
}

pub(crate) fn escape_string(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_term(g: &BrickGraph, t: &Term, out: &mut String) {
    match t {
        Term::Iri(i) => out.push_str(&g.compact(i)),
        Term::Literal(Literal::String(s)) => escape_string(s, out),
        Term::Literal(Literal::Integer(n)) => {
            let _ = write!(out, "{n}");
        }
    }
}

/// Prefixes sorted by name, then one block per subject in IRI order with
/// predicates and objects sorted. `rdf:type` is written as `a`.
pub fn serialize_turtle(g: &BrickGraph) -> String {
    let mut out = String::new();
    for (p, ns) in &g.prefixes {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }
    let mut subjects: BTreeMap<&str, BTreeMap<&str, Vec<&Term>>> = BTreeMap::new();
    for t in &g.triples {
        subjects.entry(&t.subject).or_default().entry(&t.predicate).or_default().push(&t.object);
    }
    for (s, preds) in subjects {
        out.push('\n');
        out.push_str(&g.compact(s));
        let n = preds.len();
        for (i, (p, objects)) in preds.into_iter().enumerate() {
            out.push_str(if i == 0 { " " } else { "    " });
            if p == RDF_TYPE {
                out.push('a');
            } else {
                out.push_str(&g.compact(p));
            }
            // triples come out of a BTreeSet, so objects are already sorted
            for (j, o) in objects.iter().enumerate() {
                out.push_str(if j == 0 { " " } else { ",\n        " });
                write_term(g, o, &mut out);
            }
            out.push_str(if i + 1 == n { " .\n" } else { " ;\n" });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    PrefixKw { sparql: bool },
    Iri(String),
    PName(String, String),
    A,
    Str(String),
    Int(i64),
    Dot,
    Semi,
    Comma,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl Lexer<'_> {
    fn err(&self, reason: impl Into<String>) -> TurtleSyntaxError {
        TurtleSyntaxError { line: self.line, reason: reason.into() }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if c == Some('\n') {
            self.line += 1;
        }
        c
    }

    fn next_token(&mut self) -> Result<Option<(Tok, usize)>, TurtleSyntaxError> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while !matches!(self.chars.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let line = self.line;
        let Some(&c) = self.chars.peek() else { return Ok(None) };
        let tok = match c {
            '.' => {
                self.bump();
                Tok::Dot
            }
            ';' => {
                self.bump();
                Tok::Semi
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '<' => {
                self.bump();
                let mut iri = String::new();
                loop {
                    match self.bump() {
                        Some('>') => break,
                        Some('\\') => iri.push(self.uchar()?),
                        Some(c) if c.is_whitespace() || c == '<' || c == '"' => {
                            return Err(self.err(format!("character {c:?} not allowed in IRI")))
                        }
                        Some(c) => iri.push(c),
                        None => return Err(self.err("unterminated IRI")),
                    }
                }
                Tok::Iri(iri)
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    if self.chars.peek() == Some(&'\n') {
                        return Err(self.err("unterminated string literal"));
                    }
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\'') => s.push('\''),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('r') => s.push('\r'),
                            Some('t') => s.push('\t'),
                            Some('b') => s.push('\u{8}'),
                            Some('f') => s.push('\u{c}'),
                            Some('u') => s.push(self.hex_char(4)?),
                            Some('U') => s.push(self.hex_char(8)?),
                            other => return Err(self.err(format!("unknown string escape {other:?}"))),
                        },
                        Some(c) => s.push(c),
                        None => return Err(self.err("unterminated string literal")),
                    }
                }
                if matches!(self.chars.peek(), Some('@' | '^')) {
                    return Err(self.err("typed and language-tagged literals are not supported"));
                }
                Tok::Str(s)
            }
            '@' => {
                self.bump();
                let word = self.word();
                if word != "prefix" {
                    return Err(self.err(format!("unsupported directive @{word}")));
                }
                Tok::PrefixKw { sparql: false }
            }
            c if c == '+' || c == '-' || c.is_ascii_digit() => {
                let mut s = String::new();
                s.push(self.bump().unwrap());
                while matches!(self.chars.peek(), Some(d) if d.is_ascii_digit()) {
                    s.push(self.bump().unwrap());
                }
                if matches!(self.chars.peek(), Some(c) if c.is_alphanumeric() || *c == '_' || *c == ':') {
                    return Err(self.err(format!("malformed number starting {s:?}")));
                }
                Tok::Int(s.parse().map_err(|_| self.err(format!("malformed integer {s:?}")))?)
            }
            _ => {
                let word = self.word();
                if word.is_empty() {
                    return Err(self.err(format!("unexpected character {c:?}")));
                }
                if let Some((p, local)) = word.split_once(':') {
                    Tok::PName(p.to_owned(), local.to_owned())
                } else if word == "a" {
                    Tok::A
                } else if word.eq_ignore_ascii_case("prefix") {
                    Tok::PrefixKw { sparql: true }
                } else {
                    return Err(self.err(format!("unexpected word {word:?}")));
                }
            }
        };
        Ok(Some((tok, line)))
    }

    fn hex_char(&mut self, len: usize) -> Result<char, TurtleSyntaxError> {
        let hex: String = (0..len).filter_map(|_| self.bump()).collect();
        u32::from_str_radix(&hex, 16)
            .ok()
            .filter(|_| hex.len() == len)
            .and_then(char::from_u32)
            .ok_or_else(|| self.err(format!("bad unicode escape {hex:?}")))
    }

    fn uchar(&mut self) -> Result<char, TurtleSyntaxError> {
        match self.bump() {
            Some('u') => self.hex_char(4),
            Some('U') => self.hex_char(8),
            other => Err(self.err(format!("unknown IRI escape {other:?}"))),
        }
    }

    /// Name characters; a '.' is kept only when more name characters follow.
    fn word(&mut self) -> String {
        let mut w = String::new();
        loop {
            match self.chars.peek() {
                Some(&c) if c.is_alphanumeric() || matches!(c, '_' | '-' | ':') => {
                    w.push(c);
                    self.bump();
                }
                Some('.') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    if matches!(ahead.peek(), Some(&c) if c.is_alphanumeric() || matches!(c, '_' | '-' | ':')) {
                        w.push('.');
                        self.bump();
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        w
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Tok, usize)>,
    last_line: usize,
    graph: BrickGraph,
}

impl Parser<'_> {
    fn next(&mut self) -> Result<Option<(Tok, usize)>, TurtleSyntaxError> {
        let t = match self.peeked.take() {
            Some(t) => Some(t),
            None => self.lexer.next_token()?,
        };
        if let Some((_, line)) = &t {
            self.last_line = *line;
        }
        Ok(t)
    }

    fn expect_next(&mut self, what: &str) -> Result<(Tok, usize), TurtleSyntaxError> {
        self.next()?.ok_or_else(|| TurtleSyntaxError {
            line: self.last_line,
            reason: format!("unexpected end of input, expected {what}"),
        })
    }

    fn resolve(&self, t: Tok, line: usize, what: &str) -> Result<String, TurtleSyntaxError> {
        match t {
            Tok::Iri(i) => Ok(i),
            Tok::PName(p, local) => match self.graph.prefixes.get(&p) {
                Some(ns) => Ok(format!("{ns}{local}")),
                None => Err(TurtleSyntaxError { line, reason: format!("undeclared prefix {p:?}") }),
            },
            other => Err(TurtleSyntaxError { line, reason: format!("expected {what}, found {other:?}") }),
        }
    }

    fn statement(&mut self, first: Tok, line: usize) -> Result<(), TurtleSyntaxError> {
        if let Tok::PrefixKw { sparql } = first {
            let (t, l) = self.expect_next("prefix name")?;
            let Tok::PName(p, local) = t else {
                return Err(TurtleSyntaxError { line: l, reason: "expected prefix name".into() });
            };
            if !local.is_empty() {
                return Err(TurtleSyntaxError { line: l, reason: format!("malformed prefix name {p}:{local}") });
            }
            let (t, l) = self.expect_next("namespace IRI")?;
            let Tok::Iri(ns) = t else {
                return Err(TurtleSyntaxError { line: l, reason: "expected namespace IRI".into() });
            };
            self.graph.prefixes.insert(p, ns);
            if !sparql {
                let (t, l) = self.expect_next("'.'")?;
                if t != Tok::Dot {
                    return Err(TurtleSyntaxError { line: l, reason: "expected '.' after @prefix".into() });
                }
            }
            return Ok(());
        }
        let subject = self.resolve(first, line, "subject")?;
        loop {
            let (t, l) = self.expect_next("predicate")?;
            let predicate = if t == Tok::A { RDF_TYPE.to_owned() } else { self.resolve(t, l, "predicate")? };
            loop {
                let (t, l) = self.expect_next("object")?;
                let object = match t {
                    Tok::Str(s) => Term::Literal(Literal::String(s)),
                    Tok::Int(n) => Term::Literal(Literal::Integer(n)),
                    other => Term::Iri(self.resolve(other, l, "object")?),
                };
                self.graph.triples.insert(Triple { subject: subject.clone(), predicate: predicate.clone(), object });
                let (t, l) = self.expect_next("',', ';' or '.'")?;
                match t {
                    Tok::Comma => continue,
                    Tok::Semi => {
                        // a trailing ';' before '.' is allowed
                        let (t, l) = self.expect_next("predicate or '.'")?;
                        if t == Tok::Dot {
                            return Ok(());
                        }
                        self.peeked = Some((t, l));
                        break;
                    }
                    Tok::Dot => return Ok(()),
                    other => {
                        return Err(TurtleSyntaxError {
                            line: l,
                            reason: format!("expected ',', ';' or '.', found {other:?}"),
                        })
                    }
                }
            }
        }
    }
}

/// Parses the subset of Turtle that [`serialize_turtle`] writes.
pub fn parse_turtle(text: &str) -> Result<BrickGraph, TurtleSyntaxError> {
    let mut p = Parser {
        lexer: Lexer { chars: text.chars().peekable(), line: 1 },
        peeked: None,
        last_line: 1,
        graph: BrickGraph::default(),
    };
    while let Some((t, line)) = p.next()? {
        p.statement(t, line)?;
    }
    Ok(p.graph)
}
