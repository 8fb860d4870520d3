use super::ast::{FileId, Span};
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Char(i64),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest match first. `>>` is deliberately absent: the parser treats two
// adjacent `>` as a shift so that nested `_Ptr<_Ptr<int>>` closes cleanly.
const PUNCTS: &[&str] = &[
    "...", "<<=", "->", "++", "--", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "*", "&", "+", "-",
    "/", "%", "<", ">", "=", "!", "~", "|", "^", "?", ":",
];

pub fn lex(file: FileId, src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let err = |line: u32, msg: String| ParseError::Syntax {
        file,
        line,
        message: msg,
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(err(line, "unterminated block comment".into()));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            continue;
        }
        if c == b'#' {
            return Err(err(line, "preprocessor directives are not part of mini-C".into()));
        }
        let start = i;
        let start_line = line;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c.is_ascii_digit() {
            let value = if c == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X')) {
                i += 2;
                let s = i;
                while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
                    i += 1;
                }
                i64::from_str_radix(&src[s..i], 16)
                    .map_err(|_| err(line, "bad hex literal".into()))?
            } else {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                src[start..i]
                    .parse::<i64>()
                    .map_err(|_| err(line, "integer literal out of range".into()))?
            };
            // integer suffixes are accepted and ignored
            while i < bytes.len() && matches!(bytes[i], b'u' | b'U' | b'l' | b'L') {
                i += 1;
            }
            Tok::Int(value)
        } else if c == b'\'' {
            i += 1;
            let (v, n) = unescape(&bytes[i..]).ok_or_else(|| err(line, "bad char literal".into()))?;
            i += n;
            if bytes.get(i) != Some(&b'\'') {
                return Err(err(line, "unterminated char literal".into()));
            }
            i += 1;
            Tok::Char(v as i64)
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => return Err(err(line, "unterminated string literal".into())),
                    Some(b'"') => {
                        i += 1;
                        break;
                    }
                    Some(_) => {
                        let (v, n) = unescape(&bytes[i..])
                            .ok_or_else(|| err(line, "bad escape in string".into()))?;
                        s.push(v as char);
                        i += n;
                    }
                }
            }
            Tok::Str(s)
        } else {
            let rest = &src[i..];
            match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    i += p.len();
                    Tok::Punct(p)
                }
                None => {
                    return Err(err(
                        line,
                        format!("unexpected character `{}`", rest.chars().next().unwrap_or('?')),
                    ))
                }
            }
        };
        out.push(Token {
            tok,
            span: Span::new(file, start as u32, i as u32, start_line),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(file, bytes.len() as u32, bytes.len() as u32, line),
    });
    Ok(out)
}

fn unescape(b: &[u8]) -> Option<(u8, usize)> {
    match b.first()? {
        b'\\' => {
            let v = match b.get(1)? {
                b'n' => b'\n',
                b't' => b'\t',
                b'r' => b'\r',
                b'0' => 0,
                b'\\' => b'\\',
                b'\'' => b'\'',
                b'"' => b'"',
                _ => return None,
            };
            Some((v, 2))
        }
        c => Some((*c, 1)),
    }
}
