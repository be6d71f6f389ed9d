//! Tokenizer for the ISO 10303-21 clear-text encoding.

use super::escape::decode_string;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    /// Standard or user keyword, also covers `ISO-10303-21` style section markers.
    Keyword(String),
    /// `#123`
    Ref(u64),
    Integer(i64),
    Real(f64),
    /// Already escape-decoded.
    String(String),
    /// `.NAME.`, stored without the dots.
    Enum(String),
    Dollar,
    Star,
    LParen,
    RParen,
    Comma,
    Semicolon,
    Equals,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Spanned {
    pub token: Token,
    pub line: usize,
    pub column: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, reason: impl Into<String>) -> SyntaxError {
        SyntaxError { line: self.line, column: self.column, reason: reason.into() }
    }
}

fn is_keyword_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_keyword_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut cur = Cursor::new(text);
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (line, column) = (cur.line, cur.column);
        let token = match c {
            '/' => {
                cur.bump();
                if cur.peek() != Some('*') {
                    return Err(SyntaxError { line, column, reason: "unexpected '/'".into() });
                }
                cur.bump();
                skip_comment(&mut cur, line, column)?;
                continue;
            }
            '(' => single(&mut cur, Token::LParen),
            ')' => single(&mut cur, Token::RParen),
            ',' => single(&mut cur, Token::Comma),
            ';' => single(&mut cur, Token::Semicolon),
            '=' => single(&mut cur, Token::Equals),
            '$' => single(&mut cur, Token::Dollar),
            '*' => single(&mut cur, Token::Star),
            '#' => {
                cur.bump();
                let digits = take_while(&mut cur, |c| c.is_ascii_digit());
                if digits.is_empty() {
                    return Err(SyntaxError { line, column, reason: "expected digits after '#'".into() });
                }
                let id: u64 = digits.parse().map_err(|_| SyntaxError {
                    line,
                    column,
                    reason: format!("instance id #{digits} out of range"),
                })?;
                Token::Ref(id)
            }
            '\'' => {
                cur.bump();
                let raw = read_string_body(&mut cur, line, column)?;
                let decoded = decode_string(&raw).map_err(|reason| SyntaxError { line, column, reason })?;
                Token::String(decoded)
            }
            '"' => {
                return Err(SyntaxError { line, column, reason: "binary literals are not supported".into() });
            }
            '.' => {
                cur.bump();
                let name = take_while(&mut cur, |c| c.is_ascii_alphanumeric() || c == '_');
                if name.is_empty() || !name.starts_with(is_keyword_start) {
                    return Err(SyntaxError { line, column, reason: "malformed enumeration literal".into() });
                }
                if cur.bump() != Some('.') {
                    return Err(SyntaxError { line, column, reason: "unterminated enumeration literal".into() });
                }
                Token::Enum(name.to_ascii_uppercase())
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' => read_number(&mut cur, line, column)?,
            c if is_keyword_start(c) => Token::Keyword(take_while(&mut cur, is_keyword_char)),
            other => {
                return Err(SyntaxError { line, column, reason: format!("unexpected character {other:?}") });
            }
        };
        out.push(Spanned { token, line, column });
    }
    Ok(out)
}

fn single(cur: &mut Cursor<'_>, token: Token) -> Token {
    cur.bump();
    token
}

fn take_while(cur: &mut Cursor<'_>, pred: impl Fn(char) -> bool) -> String {
    let mut s = String::new();
    while let Some(c) = cur.peek() {
        if !pred(c) {
            break;
        }
        s.push(c);
        cur.bump();
    }
    s
}

fn skip_comment(cur: &mut Cursor<'_>, line: usize, column: usize) -> Result<(), SyntaxError> {
    let mut prev_star = false;
    while let Some(c) = cur.bump() {
        if prev_star && c == '/' {
            return Ok(());
        }
        prev_star = c == '*';
    }
    Err(SyntaxError { line, column, reason: "unterminated comment".into() })
}

/// Reads up to the closing quote, leaving escape sequences intact except for
/// the doubled apostrophe. Raw line breaks inside a string are dropped.
fn read_string_body(cur: &mut Cursor<'_>, line: usize, column: usize) -> Result<String, SyntaxError> {
    let mut raw = String::new();
    loop {
        match cur.bump() {
            None => return Err(SyntaxError { line, column, reason: "unterminated string".into() }),
            Some('\'') => {
                if cur.peek() == Some('\'') {
                    cur.bump();
                    raw.push_str("''");
                } else {
                    return Ok(raw);
                }
            }
            Some('\n') | Some('\r') => {}
            Some(c) => raw.push(c),
        }
    }
}

fn read_number(cur: &mut Cursor<'_>, line: usize, column: usize) -> Result<Token, SyntaxError> {
    let mut text = String::new();
    if let Some(sign @ ('+' | '-')) = cur.peek() {
        text.push(sign);
        cur.bump();
    }
    let int_part = take_while(cur, |c| c.is_ascii_digit());
    if int_part.is_empty() {
        return Err(cur.error(format!("expected digits after '{text}'")));
    }
    text.push_str(&int_part);

    let mut is_real = false;
    if cur.peek() == Some('.') {
        is_real = true;
        cur.bump();
        text.push('.');
        text.push_str(&take_while(cur, |c| c.is_ascii_digit()));
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        is_real = true;
        cur.bump();
        text.push('E');
        if let Some(sign @ ('+' | '-')) = cur.peek() {
            text.push(sign);
            cur.bump();
        }
        let exp = take_while(cur, |c| c.is_ascii_digit());
        if exp.is_empty() {
            return Err(cur.error("malformed exponent"));
        }
        text.push_str(&exp);
    }

    if is_real {
        // Rust's float parser rejects "1.E5"; pad the empty fraction.
        let normalized = text.replace(".E", ".0E");
        let value: f64 =
            normalized.parse().map_err(|_| SyntaxError { line, column, reason: format!("malformed real {text}") })?;
        if !value.is_finite() {
            return Err(SyntaxError { line, column, reason: format!("real {text} out of range") });
        }
        Ok(Token::Real(value))
    } else {
        text.parse().map(Token::Integer).map_err(|_| SyntaxError {
            line,
            column,
            reason: format!("integer {text} out of range"),
        })
    }
}
