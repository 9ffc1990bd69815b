use super::ast::Pos;
use super::diagnostics::{Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    DotDot,
    Eq,
    Tilde,
    Plus,
    Minus,
    Star,
    Colon,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{}`", s),
            Tok::Var(s) => format!("variable `{}`", s),
            Tok::Int(i) => format!("integer `{}`", i),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

/// Splits `src` into tokens. `%` starts a comment running to end of line.
/// The final token is always `Eof`.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let bytes = src.as_bytes();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col, offset: i };
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'%' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'{' => Some(Tok::LBrace),
            b'}' => Some(Tok::RBrace),
            b',' => Some(Tok::Comma),
            b'=' => Some(Tok::Eq),
            b'~' => Some(Tok::Tilde),
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push(Token { tok, pos });
            i += 1;
            col += 1;
            continue;
        }
        if c == b'.' {
            if bytes.get(i + 1) == Some(&b'.') {
                tokens.push(Token { tok: Tok::DotDot, pos });
                i += 2;
                col += 2;
            } else {
                tokens.push(Token { tok: Tok::Dot, pos });
                i += 1;
                col += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            match text.parse::<i64>() {
                Ok(v) => tokens.push(Token { tok: Tok::Int(v), pos }),
                Err(_) => errors.push(Diagnostic::new(
                    DiagnosticKind::Syntax,
                    format!("integer literal `{}` out of range", text),
                    Some(pos),
                )),
            }
            col += (i - start) as u32;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = src[start..i].to_string();
            let tok = if c.is_ascii_uppercase() || c == b'_' {
                Tok::Var(text)
            } else {
                Tok::Ident(text)
            };
            tokens.push(Token { tok, pos });
            col += (i - start) as u32;
            continue;
        }
        // Skip a whole UTF-8 scalar so the column stays meaningful.
        let ch = src[i..].chars().next().unwrap_or('?');
        errors.push(Diagnostic::new(
            DiagnosticKind::Syntax,
            format!("unexpected character `{}`", ch),
            Some(pos),
        ));
        i += ch.len_utf8();
        col += 1;
    }

    let eof = Pos {
        line,
        col,
        offset: src.len(),
    };
    tokens.push(Token { tok: Tok::Eof, pos: eof });
    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_and_terminator() {
        let toks: Vec<Tok> = tokenize("sort row = 1..20.")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("sort".into()),
                Tok::Ident("row".into()),
                Tok::Eq,
                Tok::Int(1),
                Tok::DotDot,
                Tok::Int(20),
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("% header\n  inertial pos.").unwrap();
        assert_eq!(toks[0].pos.line, 2);
        assert_eq!(toks[0].pos.col, 3);
        assert_eq!(toks[0].pos.offset, 11);
    }

    #[test]
    fn bad_character_reported() {
        let errs = tokenize("inertial pos;").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].pos.unwrap().col, 13);
    }
}
