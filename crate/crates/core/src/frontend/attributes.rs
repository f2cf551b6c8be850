use std::fmt;

use super::lexer::{tokenize, TokenKind};
use super::parser::Parser;
use super::{Loc, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeValue {
    Number(f64),
    Numbers(Vec<f64>),
    Text(String),
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Number(n) => write!(f, "{n}"),
            AttributeValue::Numbers(v) => {
                let items: Vec<String> = v.iter().map(|n| n.to_string()).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
            AttributeValue::Text(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeGroup {
    pub name: String,
    /// Entries in source order; keys are unique.
    pub entries: Vec<(String, AttributeValue)>,
    pub loc: Loc,
}

impl AttributeGroup {
    pub fn get(&self, key: &str) -> Option<&AttributeValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeFile {
    pub groups: Vec<AttributeGroup>,
}

impl AttributeFile {
    pub fn group(&self, name: &str) -> Option<&AttributeGroup> {
        self.groups.iter().find(|g| g.name == name)
    }
}

/// Parses `attributes NAME { key.path = value; ... }` groups.
///
/// Values are numbers, `{...}` number lists, quoted strings, or bare text
/// running up to the next `;` (for file names such as `sandStone.jpg`).
pub fn parse_attributes(src: &str) -> Result<AttributeFile, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, end: Loc::default() };
    let mut file = AttributeFile::default();
    while p.peek().is_some() {
        let (kw, kw_loc) = p.ident()?;
        if kw != "attributes" {
            return Err(ParseError::new(
                kw_loc,
                ParseErrorKind::Syntax { expected: "`attributes`".into(), found: format!("identifier `{kw}`") },
            ));
        }
        let (name, loc) = p.ident()?;
        if file.group(&name).is_some() {
            return Err(ParseError::new(loc, ParseErrorKind::DuplicateGroup(name)));
        }
        p.expect("{")?;
        let mut group = AttributeGroup { name, entries: Vec::new(), loc };
        while !p.eat("}") {
            let (mut key, key_loc) = p.ident()?;
            while p.eat(".") {
                key.push('.');
                key.push_str(&p.ident()?.0);
            }
            p.expect("=")?;
            let value = value(&mut p, src)?;
            p.expect(";")?;
            if group.get(&key).is_some() {
                return Err(ParseError::new(key_loc, ParseErrorKind::DuplicateKey { group: group.name.clone(), key }));
            }
            group.entries.push((key, value));
        }
        file.groups.push(group);
    }
    Ok(file)
}

fn value(p: &mut Parser, src: &str) -> Result<AttributeValue, ParseError> {
    let start = p.pos;
    if p.eat("{") {
        let mut items = Vec::new();
        while !p.eat("}") {
            items.push(number(p)?);
            if !p.eat(",") {
                p.expect("}")?;
                break;
            }
        }
        return Ok(AttributeValue::Numbers(items));
    }
    if let Ok(n) = number(p) {
        if p.is_punct(";") {
            return Ok(AttributeValue::Number(n));
        }
    }
    p.pos = start;
    if let Some(TokenKind::Str(s)) = p.peek() {
        let s = s.clone();
        p.advance();
        if p.is_punct(";") {
            return Ok(AttributeValue::Text(s));
        }
        p.pos = start;
    }
    // bare text up to the terminating semicolon
    let Some(first) = p.tokens.get(start).cloned() else {
        return Err(p.error("value"));
    };
    while !p.is_punct(";") {
        if p.peek().is_none() || p.is_punct("}") {
            return Err(p.error("`;`"));
        }
        p.advance();
    }
    if p.pos == start {
        return Err(p.error("value"));
    }
    let last = &p.tokens[p.pos - 1];
    Ok(AttributeValue::Text(src[first.start..last.end].to_string()))
}

fn number(p: &mut Parser) -> Result<f64, ParseError> {
    let sign = if p.eat("-") { -1.0 } else { 1.0 };
    match p.peek() {
        Some(TokenKind::Number(n)) => {
            let n = *n;
            p.advance();
            Ok(sign * n)
        }
        _ => Err(p.error("number")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BRICKS: &str = "attributes sand {\n\tbrick.width = 1.5;\n\tbrick.height = 0.6;\n\tbrick.texture = sandStone.jpg;\n}\nattributes rock { \n\tbrick.width = 0.7;\n\tbrick.height = 0.3;\n\tbrick.texture = rock.jpg;\n}\n";

    #[test]
    fn brick_groups() {
        let f = parse_attributes(BRICKS).unwrap();
        assert_eq!(f.groups.len(), 2);
        let sand = f.group("sand").unwrap();
        assert_eq!(sand.get("brick.width"), Some(&AttributeValue::Number(1.5)));
        assert_eq!(sand.get("brick.texture"), Some(&AttributeValue::Text("sandStone.jpg".into())));
        assert_eq!(f.group("rock").unwrap().get("brick.height"), Some(&AttributeValue::Number(0.3)));
    }

    #[test]
    fn empty_file() {
        assert!(parse_attributes("").unwrap().groups.is_empty());
    }

    #[test]
    fn duplicates_are_errors() {
        let e = parse_attributes("attributes a { k = 1; k = 2; }").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::DuplicateKey { .. }));
        assert_eq!((e.loc.line, e.loc.col), (1, 23));
        let e = parse_attributes("attributes a { k = 1; }\nattributes a { j = 1; }").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateGroup("a".into()));
    }

    #[test]
    fn lists_strings_and_negatives() {
        let f = parse_attributes("attributes a { c = {1, 0, -0.5}; s = \"x y\"; n = -2; w = rock-01.jpg; }").unwrap();
        let a = f.group("a").unwrap();
        assert_eq!(a.get("c"), Some(&AttributeValue::Numbers(vec![1.0, 0.0, -0.5])));
        assert_eq!(a.get("s"), Some(&AttributeValue::Text("x y".into())));
        assert_eq!(a.get("n"), Some(&AttributeValue::Number(-2.0)));
        assert_eq!(a.get("w"), Some(&AttributeValue::Text("rock-01.jpg".into())));
    }

    #[test]
    fn missing_semicolon() {
        assert!(parse_attributes("attributes a { k = 1 }").is_err());
    }
}
