use std::fmt;

use super::{Loc, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Number(f64),
    Str(String),
    /// `@group.key` with the dotted name after the `@`.
    AttrRef(String),
    Punct(&'static str),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Number(n) => write!(f, "number `{n}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::AttrRef(s) => write!(f, "attribute `@{s}`"),
            TokenKind::Punct(p) => write!(f, "`{p}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Loc,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

const PUNCTS: [&str; 36] = [
    "&&", "||", "==", "!=", "<=", ">=", "++", "--", "+=", "-=", "*=", "/=", "%=", "::", "{", "}", "(", ")", "[", "]",
    ";", ",", ".", ":", "+", "-", "*", "/", "%", "=", "<", ">", "!", "?", "&", "|",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Loc {
        Loc::new(self.line, self.col)
    }
}

/// Splits source text into tokens, skipping whitespace and comments.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let loc = cur.loc();
        let start = cur.pos;
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('*') {
            cur.bump();
            cur.bump();
            loop {
                match cur.peek() {
                    None => return Err(ParseError::new(loc, ParseErrorKind::UnterminatedComment)),
                    Some('*') if cur.peek_at(1) == Some('/') => {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    Some(_) => {
                        cur.bump();
                    }
                }
            }
            continue;
        }
        let kind = if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            TokenKind::Ident(read_ident(&mut cur))
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            read_number(&mut cur, loc)?
        } else if c == '"' {
            read_string(&mut cur, loc)?
        } else if c == '@' {
            cur.bump();
            if !cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                return Err(ParseError::new(loc, ParseErrorKind::UnexpectedChar('@')));
            }
            let mut name = read_ident(&mut cur);
            while cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                cur.bump();
                name.push('.');
                name.push_str(&read_ident(&mut cur));
            }
            TokenKind::AttrRef(name)
        } else {
            let rest = &src[cur.pos..];
            let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
                return Err(ParseError::new(loc, ParseErrorKind::UnexpectedChar(c)));
            };
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punct(p)
        };
        out.push(Token { kind, loc, start, end: cur.pos });
    }
    Ok(out)
}

fn read_ident(cur: &mut Cursor) -> String {
    let start = cur.pos;
    while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$') {
        cur.bump();
    }
    cur.src[start..cur.pos].to_string()
}

fn read_number(cur: &mut Cursor, loc: Loc) -> Result<TokenKind, ParseError> {
    let start = cur.pos;
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') && cur.peek_at(1).is_none_or(|c| !c.is_ascii_alphabetic() || c == 'e' || c == 'E') {
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E'))
        && (cur.peek_at(1).is_some_and(|c| c.is_ascii_digit())
            || (matches!(cur.peek_at(1), Some('+' | '-')) && cur.peek_at(2).is_some_and(|c| c.is_ascii_digit())))
    {
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    let text = &cur.src[start..cur.pos];
    let value: f64 = text.parse().map_err(|_| ParseError::new(loc, ParseErrorKind::BadNumber(text.to_string())))?;
    // Java-style type suffixes
    if matches!(cur.peek(), Some('f' | 'F' | 'd' | 'D' | 'L' | 'l'))
        && !cur.peek_at(1).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        cur.bump();
    }
    Ok(TokenKind::Number(value))
}

fn read_string(cur: &mut Cursor, loc: Loc) -> Result<TokenKind, ParseError> {
    cur.bump();
    let mut s = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => return Err(ParseError::new(loc, ParseErrorKind::UnterminatedString)),
            Some('"') => break,
            Some('\\') => match cur.bump() {
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some('r') => s.push('\r'),
                Some('0') => s.push('\0'),
                Some(c @ ('"' | '\\' | '\'')) => s.push(c),
                Some(c) => {
                    s.push('\\');
                    s.push(c);
                }
                None => return Err(ParseError::new(loc, ParseErrorKind::UnterminatedString)),
            },
            Some(c) => s.push(c),
        }
    }
    Ok(TokenKind::Str(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn split_call_tokens() {
        let k = kinds("split(y, {t, scope.h - t})");
        assert_eq!(k[0], TokenKind::Ident("split".into()));
        assert_eq!(k.len(), 14);
        assert!(k.contains(&TokenKind::Punct(".")));
    }

    #[test]
    fn empty_source() {
        assert!(kinds("").is_empty());
        assert!(kinds("  // only a comment\n/* and another */").is_empty());
    }

    #[test]
    fn attribute_reference_then_division() {
        assert_eq!(
            kinds("@brick.width/2"),
            vec![TokenKind::AttrRef("brick.width".into()), TokenKind::Punct("/"), TokenKind::Number(2.0)]
        );
    }

    #[test]
    fn java_number_suffixes_and_locations() {
        let toks = tokenize("float t = 0.4f;\n  x = 3;").unwrap();
        assert_eq!(toks[3].kind, TokenKind::Number(0.4));
        assert_eq!((toks[5].loc.line, toks[5].loc.col), (2, 3));
    }

    #[test]
    fn unterminated_constructs_report_location() {
        let e = tokenize("a\n  \"abc").unwrap_err();
        assert_eq!((e.loc.line, e.loc.col), (2, 3));
        assert!(matches!(e.kind, ParseErrorKind::UnterminatedString));
        let e = tokenize("/* open").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnterminatedComment));
    }
}
