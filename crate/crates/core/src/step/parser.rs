use std::collections::BTreeMap;

use super::lexer::{tokenize, Spanned, Token};
use super::{StepEntity, StepError, StepFile, StepHeader, StepValue, SyntaxError};

/// Lists nested deeper than this are rejected instead of recursing further.
const MAX_DEPTH: usize = 64;

/// Parses the text of a Part 21 file.
///
/// Only the HEADER and DATA sections are interpreted. Several DATA sections
/// are concatenated. References are not checked here; see
/// [`super::resolve_refs`].
pub fn parse_step(text: &str) -> Result<StepFile, StepError> {
    let tokens = tokenize(text)?;
    Parser { tokens: &tokens, pos: 0 }.file()
}

/// Like [`parse_step`] but accepts raw bytes; invalid UTF-8 is reported as a
/// located syntax error.
pub fn parse_step_bytes(bytes: &[u8]) -> Result<StepFile, StepError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_step(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            let line = 1 + valid.iter().filter(|&&b| b == b'\n').count();
            let line_start = valid.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            let column = 1 + String::from_utf8_lossy(&valid[line_start..]).chars().count();
            Err(SyntaxError { line, column, reason: "invalid UTF-8".into() }.into())
        }
    }
}

struct Parser<'t> {
    tokens: &'t [Spanned],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos).map(|s| &s.token)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, reason: impl Into<String>) -> SyntaxError {
        let (line, column) = match self.tokens.get(self.pos).or_else(|| self.tokens.last()) {
            Some(s) => (s.line, s.column),
            None => (1, 1),
        };
        SyntaxError { line, column, reason: reason.into() }
    }

    fn expect(&mut self, want: &Token, what: &str) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected {what}, found {}", describe(t)))),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(Token::Keyword(k)) if k.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected {kw}, found {}", describe(t)))),
            None => Err(self.error(format!("expected {kw}, found end of input"))),
        }
    }

    fn file(mut self) -> Result<StepFile, StepError> {
        self.expect_keyword("ISO-10303-21")?;
        self.expect(&Token::Semicolon, "';'")?;

        let mut header = StepHeader::default();
        let mut entities = BTreeMap::new();
        let mut saw_data = false;

        loop {
            let section = match self.next() {
                Some(Token::Keyword(k)) => k.to_ascii_uppercase(),
                Some(t) => {
                    self.pos -= 1;
                    return Err(self.error(format!("expected section keyword, found {}", describe(t))).into());
                }
                None => return Err(self.error("expected END-ISO-10303-21, found end of input").into()),
            };
            match section.as_str() {
                "HEADER" => {
                    self.expect(&Token::Semicolon, "';'")?;
                    self.header_section(&mut header)?;
                }
                "DATA" => {
                    // edition 3 allows DATA('name', (schemas)); the parameters are ignored
                    if self.peek() == Some(&Token::LParen) {
                        self.value(0)?;
                    }
                    self.expect(&Token::Semicolon, "';'")?;
                    saw_data = true;
                    self.data_section(&mut entities)?;
                }
                "END-ISO-10303-21" => {
                    self.expect(&Token::Semicolon, "';'")?;
                    break;
                }
                other => {
                    self.pos -= 1;
                    return Err(self.error(format!("unsupported section {other}")).into());
                }
            }
        }

        if !saw_data {
            return Err(StepError::MissingDataSection);
        }
        Ok(StepFile { header, entities, dangling: Vec::new() })
    }

    fn header_section(&mut self, header: &mut StepHeader) -> Result<(), SyntaxError> {
        loop {
            let name = match self.next() {
                Some(Token::Keyword(k)) if k.eq_ignore_ascii_case("ENDSEC") => {
                    return self.expect(&Token::Semicolon, "';'");
                }
                Some(Token::Keyword(k)) => k.to_ascii_uppercase(),
                Some(t) => {
                    self.pos -= 1;
                    return Err(self.error(format!("expected header entity, found {}", describe(t))));
                }
                None => return Err(self.error("unterminated HEADER section")),
            };
            let args = self.arg_list(0)?;
            self.expect(&Token::Semicolon, "';'")?;
            let strings = |v: Option<&StepValue>| -> Vec<String> {
                v.and_then(StepValue::as_list)
                    .map(|items| items.iter().filter_map(|i| i.as_str().map(str::to_owned)).collect())
                    .unwrap_or_default()
            };
            match name.as_str() {
                "FILE_DESCRIPTION" => header.description = strings(args.first()),
                "FILE_NAME" => {
                    header.name = args.first().and_then(StepValue::as_str).unwrap_or_default().to_owned();
                }
                "FILE_SCHEMA" => header.schema = strings(args.first()),
                _ => {}
            }
        }
    }

    fn data_section(&mut self, entities: &mut BTreeMap<u64, StepEntity>) -> Result<(), StepError> {
        loop {
            match self.next() {
                Some(Token::Keyword(k)) if k.eq_ignore_ascii_case("ENDSEC") => {
                    self.expect(&Token::Semicolon, "';'")?;
                    return Ok(());
                }
                Some(Token::Ref(id)) => {
                    let id = *id;
                    if id == 0 {
                        self.pos -= 1;
                        return Err(self.error("instance id must be positive").into());
                    }
                    self.expect(&Token::Equals, "'='")?;
                    let type_name = match self.next() {
                        Some(Token::Keyword(k)) => k.to_ascii_uppercase(),
                        Some(Token::LParen) => {
                            self.pos -= 1;
                            return Err(self.error("complex entity instances are not supported").into());
                        }
                        Some(t) => {
                            self.pos -= 1;
                            return Err(self.error(format!("expected entity type, found {}", describe(t))).into());
                        }
                        None => return Err(self.error("expected entity type, found end of input").into()),
                    };
                    let args = self.arg_list(0)?;
                    self.expect(&Token::Semicolon, "';'")?;
                    if entities.contains_key(&id) {
                        return Err(StepError::DuplicateId(id));
                    }
                    entities.insert(id, StepEntity { id, type_name, args });
                }
                Some(t) => {
                    self.pos -= 1;
                    return Err(self.error(format!("expected instance or ENDSEC, found {}", describe(t))).into());
                }
                None => return Err(self.error("unterminated DATA section").into()),
            }
        }
    }

    /// `( value, value, ... )`
    fn arg_list(&mut self, depth: usize) -> Result<Vec<StepValue>, SyntaxError> {
        if depth > MAX_DEPTH {
            return Err(self.error("lists nested too deeply"));
        }
        self.expect(&Token::LParen, "'('")?;
        let mut items = Vec::new();
        if self.peek() == Some(&Token::RParen) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            items.push(self.value(depth + 1)?);
            match self.next() {
                Some(Token::Comma) => continue,
                Some(Token::RParen) => return Ok(items),
                Some(t) => {
                    self.pos -= 1;
                    return Err(self.error(format!("expected ',' or ')', found {}", describe(t))));
                }
                None => return Err(self.error("unterminated parameter list")),
            }
        }
    }

    fn value(&mut self, depth: usize) -> Result<StepValue, SyntaxError> {
        let Some(token) = self.peek() else {
            return Err(self.error("expected a value, found end of input"));
        };
        let v = match token {
            Token::Integer(v) => StepValue::Integer(*v),
            Token::Real(v) => StepValue::Real(*v),
            Token::String(s) => StepValue::String(s.clone()),
            Token::Enum(e) => StepValue::Enum(e.clone()),
            Token::Ref(id) => StepValue::Ref(*id),
            Token::Dollar => StepValue::Null,
            Token::Star => StepValue::Derived,
            Token::LParen => return self.arg_list(depth).map(StepValue::List),
            Token::Keyword(name) => {
                let name = name.to_ascii_uppercase();
                self.pos += 1;
                let mut inner = self.arg_list(depth)?;
                if inner.len() != 1 {
                    return Err(self.error(format!("typed parameter {name} must wrap exactly one value")));
                }
                return Ok(StepValue::Typed(name, Box::new(inner.remove(0))));
            }
            other => return Err(self.error(format!("expected a value, found {}", describe(other)))),
        };
        self.pos += 1;
        Ok(v)
    }
}

fn describe(t: &Token) -> String {
    match t {
        Token::Keyword(k) => format!("keyword {k}"),
        Token::Ref(id) => format!("#{id}"),
        Token::Integer(v) => format!("integer {v}"),
        Token::Real(v) => format!("real {v}"),
        Token::String(_) => "string".into(),
        Token::Enum(e) => format!(".{e}."),
        Token::Dollar => "'$'".into(),
        Token::Star => "'*'".into(),
        Token::LParen => "'('".into(),
        Token::RParen => "')'".into(),
        Token::Comma => "','".into(),
        Token::Semicolon => "';'".into(),
        Token::Equals => "'='".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::resolve_refs;

    fn wrap(data: &str) -> String {
        format!(
            "ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION(('ViewDefinition [CoordinationView]'),'2;1');\n\
             FILE_NAME('demo.ifc','2024-01-01T00:00:00',('a'),('b'),'x','y','');\n\
             FILE_SCHEMA(('IFC4'));\nENDSEC;\nDATA;\n{data}\nENDSEC;\nEND-ISO-10303-21;\n"
        )
    }

    #[test]
    fn minimal_file_with_one_building() {
        let f = parse_step(&wrap("#1=IFCBUILDING($,$,'B1',$,$,$,$,$,$,$,$,$);")).unwrap();
        assert_eq!(f.entities.len(), 1);
        let e = f.get(1).unwrap();
        assert_eq!(e.type_name, "IFCBUILDING");
        assert_eq!(e.args.len(), 12);
        assert_eq!(e.str_arg(2), Some("B1"));
        assert_eq!(f.header.name, "demo.ifc");
        assert_eq!(f.header.schema, vec!["IFC4".to_string()]);
        assert_eq!(f.header.description, vec!["ViewDefinition [CoordinationView]".to_string()]);
    }

    #[test]
    fn origin_point_is_a_list_of_three_reals() {
        let f = parse_step(&wrap("#2=IFCCARTESIANPOINT((0.,0.,0.));")).unwrap();
        assert_eq!(f.get(2).unwrap().args, vec![StepValue::List(vec![StepValue::Real(0.0); 3])]);
    }

    #[test]
    fn global_id_with_dollar_survives() {
        let f = parse_step(&wrap("#3=IFCSPACE('2O2Fr$t4X7Zf8NOew3FLKD',$,'Room 101',$);")).unwrap();
        let gid = f.get(3).unwrap().str_arg(0).unwrap();
        assert_eq!(gid, "2O2Fr$t4X7Zf8NOew3FLKD");
        assert_eq!(gid.len(), 22);
    }

    #[test]
    fn records_may_span_lines_and_type_names_are_uppercased() {
        let f = parse_step(&wrap("#7=\n IfcPropertySingleValue('Identifier',\n$,IFCLABEL('VAV-1'),\n$);")).unwrap();
        let e = f.get(7).unwrap();
        assert_eq!(e.type_name, "IFCPROPERTYSINGLEVALUE");
        assert_eq!(e.args[2], StepValue::Typed("IFCLABEL".into(), Box::new(StepValue::String("VAV-1".into()))));
    }

    #[test]
    fn unknown_types_are_kept() {
        let f = parse_step(&wrap("#1=IFCFUTURETHING(.X.,*,$,-3);")).unwrap();
        assert_eq!(
            f.get(1).unwrap().args,
            vec![StepValue::Enum("X".into()), StepValue::Derived, StepValue::Null, StepValue::Integer(-3)]
        );
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = parse_step(&wrap("#1=A();\n#1=B();")).unwrap_err();
        assert_eq!(err, StepError::DuplicateId(1));
    }

    #[test]
    fn missing_data_section() {
        let text = "ISO-10303-21;HEADER;FILE_SCHEMA(('IFC4'));ENDSEC;END-ISO-10303-21;";
        assert_eq!(parse_step(text).unwrap_err(), StepError::MissingDataSection);
    }

    #[test]
    fn syntax_errors_are_located() {
        let err = parse_step(&wrap("#1=IFCWALL('a',,$);")).unwrap_err();
        let StepError::Syntax(e) = err else { panic!("expected syntax error") };
        assert_eq!(e.line, 8);
        assert_eq!(e.column, 16);
    }

    #[test]
    fn invalid_utf8_is_a_located_error() {
        let mut bytes = wrap("#1=A('x');").into_bytes();
        bytes.insert(bytes.len() - 30, 0xff);
        assert!(matches!(parse_step_bytes(&bytes), Err(StepError::Syntax(_))));
    }

    #[test]
    fn deep_nesting_is_rejected_without_overflow() {
        let deep = format!("#1=A({}{});", "(".repeat(5000), ")".repeat(5000));
        assert!(matches!(parse_step(&wrap(&deep)), Err(StepError::Syntax(_))));
    }

    #[test]
    fn dangling_references_are_reported() {
        let ok = resolve_refs(parse_step(&wrap("#4=A();#5=B(#4);")).unwrap());
        assert!(ok.dangling.is_empty());
        let bad = resolve_refs(parse_step(&wrap("#4=A();#5=B((#4,#99));")).unwrap());
        assert_eq!(bad.dangling, vec![super::super::DanglingRef { from: 5, to: 99 }]);
        assert!(bad.is_dangling(5, 99));
    }

    #[test]
    fn serialized_entities_reparse_identically() {
        let src = "#1=IFCX('it''s \\X2\\00E9\\X0\\',(1,2.5,-1.E-7),.T.,$,*,#2,IFCLABEL('L'));";
        let f = parse_step(&wrap(src)).unwrap();
        assert_eq!(f.get(1).unwrap().to_string(), src);
    }
}
