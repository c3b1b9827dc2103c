use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    For,
    Let,
    In,
    Where,
    Return,
    Some,
    Satisfies,
    /// Any other name, including operator words such as `div`, `eq` and
    /// `and`; the parser decides by position.
    Name(String),
    Var(String),
    Str(String),
    Integer(String),
    Decimal(String),
    Double(String),
    LParen,
    RParen,
    Comma,
    Slash,
    At,
    Assign,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::For => "for".into(),
            TokenKind::Let => "let".into(),
            TokenKind::In => "in".into(),
            TokenKind::Where => "where".into(),
            TokenKind::Return => "return".into(),
            TokenKind::Some => "some".into(),
            TokenKind::Satisfies => "satisfies".into(),
            TokenKind::Name(n) => n.clone(),
            TokenKind::Var(v) => format!("${}", v),
            TokenKind::Str(s) => format!("{:?}", s),
            TokenKind::Integer(t) | TokenKind::Decimal(t) | TokenKind::Double(t) => t.clone(),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Comma => ",".into(),
            TokenKind::Slash => "/".into(),
            TokenKind::At => "@".into(),
            TokenKind::Assign => ":=".into(),
            TokenKind::Eq => "=".into(),
            TokenKind::Ne => "!=".into(),
            TokenKind::Lt => "<".into(),
            TokenKind::Le => "<=".into(),
            TokenKind::Gt => ">".into(),
            TokenKind::Ge => ">=".into(),
            TokenKind::Plus => "+".into(),
            TokenKind::Minus => "-".into(),
            TokenKind::Star => "*".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

fn keyword(name: &str) -> Option<TokenKind> {
    Some(match name {
        "for" => TokenKind::For,
        "let" => TokenKind::Let,
        "in" => TokenKind::In,
        "where" => TokenKind::Where,
        "return" => TokenKind::Return,
        "some" => TokenKind::Some,
        "satisfies" => TokenKind::Satisfies,
        _ => return None,
    })
}

/// Splits query text into tokens. The stream always ends with `Eof`.
pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let lex_err = |offset: usize, message: String| Error::Lex { offset, message };
    while i < bytes.len() {
        let c = text[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if text[i..].starts_with("(:") {
            let start = i;
            let mut depth = 0;
            loop {
                if text[i..].starts_with("(:") {
                    depth += 1;
                    i += 2;
                } else if text[i..].starts_with(":)") {
                    depth -= 1;
                    i += 2;
                    if depth == 0 {
                        break;
                    }
                } else if i >= bytes.len() {
                    return Err(lex_err(start, "unterminated comment".into()));
                } else {
                    i += text[i..].chars().next().unwrap().len_utf8();
                }
            }
            continue;
        }
        let start = i;
        let kind = match c {
            '(' => {
                i += 1;
                TokenKind::LParen
            }
            ')' => {
                i += 1;
                TokenKind::RParen
            }
            ',' => {
                i += 1;
                TokenKind::Comma
            }
            '/' => {
                i += 1;
                TokenKind::Slash
            }
            '@' => {
                i += 1;
                TokenKind::At
            }
            '+' => {
                i += 1;
                TokenKind::Plus
            }
            '-' => {
                i += 1;
                TokenKind::Minus
            }
            '*' => {
                i += 1;
                TokenKind::Star
            }
            '=' => {
                i += 1;
                TokenKind::Eq
            }
            ':' if text[i..].starts_with(":=") => {
                i += 2;
                TokenKind::Assign
            }
            '!' if text[i..].starts_with("!=") => {
                i += 2;
                TokenKind::Ne
            }
            '<' => {
                if text[i..].starts_with("<=") {
                    i += 2;
                    TokenKind::Le
                } else {
                    i += 1;
                    TokenKind::Lt
                }
            }
            '>' => {
                if text[i..].starts_with(">=") {
                    i += 2;
                    TokenKind::Ge
                } else {
                    i += 1;
                    TokenKind::Gt
                }
            }
            '"' | '\'' => {
                let quote = c;
                i += 1;
                let mut s = String::new();
                loop {
                    let Some(ch) = text[i..].chars().next() else {
                        return Err(lex_err(start, "unterminated string literal".into()));
                    };
                    i += ch.len_utf8();
                    if ch == quote {
                        if text[i..].starts_with(quote) {
                            s.push(quote);
                            i += 1;
                        } else {
                            break;
                        }
                    } else {
                        s.push(ch);
                    }
                }
                TokenKind::Str(s)
            }
            '$' => {
                i += 1;
                let name_start = i;
                match text[i..].chars().next() {
                    Some(ch) if is_name_start(ch) => {}
                    _ => return Err(lex_err(start, "expected a variable name after '$'".into())),
                }
                while let Some(ch) = text[i..].chars().next().filter(|&ch| is_name_char(ch)) {
                    i += ch.len_utf8();
                }
                TokenKind::Var(text[name_start..i].to_string())
            }
            c if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut decimal = false;
                if i < bytes.len() && bytes[i] == b'.' {
                    decimal = true;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let mut double = false;
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                        double = true;
                    } else {
                        return Err(lex_err(start, "malformed exponent".into()));
                    }
                }
                if i < bytes.len() && is_name_start(text[i..].chars().next().unwrap()) {
                    return Err(lex_err(i, "name characters directly after a number".into()));
                }
                let t = text[start..i].to_string();
                if double {
                    TokenKind::Double(t)
                } else if decimal {
                    TokenKind::Decimal(t)
                } else {
                    TokenKind::Integer(t)
                }
            }
            c if is_name_start(c) => {
                while let Some(ch) = text[i..].chars().next().filter(|&ch| is_name_char(ch)) {
                    i += ch.len_utf8();
                }
                let name = &text[start..i];
                keyword(name).unwrap_or_else(|| TokenKind::Name(name.to_string()))
            }
            other => return Err(lex_err(start, format!("illegal character {:?}", other))),
        };
        out.push(Token { kind, offset: start });
    }
    out.push(Token {
        kind: TokenKind::Eof,
        offset: text.len(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn keywords_and_names() {
        assert_eq!(kinds("for $r in"), vec![For, Var("r".into()), In, Eof]);
        assert_eq!(
            kinds("doc(\"book.xml\")"),
            vec![Name("doc".into()), LParen, Str("book.xml".into()), RParen, Eof]
        );
        assert_eq!(
            kinds("1 div 10"),
            vec![Integer("1".into()), Name("div".into()), Integer("10".into()), Eof]
        );
    }

    #[test]
    fn hyphenated_names_numbers_and_comments() {
        assert_eq!(
            kinds("year-from-dateTime($d) ge 2003 (: note (: nested :) :) 491.744 1e3"),
            vec![
                Name("year-from-dateTime".into()),
                LParen,
                Var("d".into()),
                RParen,
                Name("ge".into()),
                Integer("2003".into()),
                Decimal("491.744".into()),
                Double("1e3".into()),
                Eof
            ]
        );
        assert_eq!(kinds("'it''s'"), vec![Str("it's".into()), Eof]);
    }

    #[test]
    fn illegal_character_reports_offset() {
        match tokenize("for $r # x") {
            Err(Error::Lex { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("{:?}", other),
        }
    }
}
