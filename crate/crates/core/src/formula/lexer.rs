use crate::address::parse_a1_part;

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Number(f64),
    Str(String),
    /// Cell reference, with the sheet qualifier if one was written.
    Ref {
        sheet: Option<String>,
        col: u32,
        row: u32,
    },
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Colon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: usize,
}

const OPS: [&str; 13] = [
    "<=", ">=", "<>", "+", "-", "*", "/", "^", "&", "=", "<", ">", "%",
];

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$'
}

/// Tokenize the formula body (the text after `=`). `offset` is added to
/// reported positions.
pub fn tokenize(src: &str, offset: usize) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: String| ParseError {
        position: pos + offset,
        message: msg,
    };
    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, pos: start + offset });
        match c {
            '(' => {
                push(&mut out, Tok::LParen);
                i += 1;
            }
            ')' => {
                push(&mut out, Tok::RParen);
                i += 1;
            }
            ',' => {
                push(&mut out, Tok::Comma);
                i += 1;
            }
            ':' => {
                push(&mut out, Tok::Colon);
                i += 1;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    let Some(ch) = src[i..].chars().next() else {
                        return Err(err(start, "unterminated string literal".into()));
                    };
                    i += ch.len_utf8();
                    if ch == '"' {
                        if bytes.get(i) == Some(&b'"') {
                            s.push('"');
                            i += 1;
                        } else {
                            break;
                        }
                    } else {
                        s.push(ch);
                    }
                }
                push(&mut out, Tok::Str(s));
            }
            '0'..='9' | '.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &src[i..j];
                let n: f64 = text
                    .parse()
                    .map_err(|_| err(start, format!("invalid number `{text}`")))?;
                push(&mut out, Tok::Number(n));
                i = j;
            }
            '\'' => {
                // quoted sheet name
                let mut name = String::new();
                i += 1;
                loop {
                    let Some(ch) = src[i..].chars().next() else {
                        return Err(err(start, "unterminated sheet name".into()));
                    };
                    i += ch.len_utf8();
                    if ch == '\'' {
                        if bytes.get(i) == Some(&b'\'') {
                            name.push('\'');
                            i += 1;
                        } else {
                            break;
                        }
                    } else {
                        name.push(ch);
                    }
                }
                if bytes.get(i) != Some(&b'!') || name.is_empty() {
                    return Err(err(start, "expected `!` after quoted sheet name".into()));
                }
                i += 1;
                let (tok, next) = qualified_ref(src, i, name).map_err(|m| err(start, m))?;
                push(&mut out, tok);
                i = next;
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '$' => {
                let mut j = i;
                while let Some(ch) = src[j..].chars().next() {
                    if is_word_char(ch) {
                        j += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                let word = &src[i..j];
                if bytes.get(j) == Some(&b'!') {
                    let (tok, next) =
                        qualified_ref(src, j + 1, word.to_string()).map_err(|m| err(start, m))?;
                    push(&mut out, tok);
                    i = next;
                    continue;
                }
                let next_is_paren = src[j..].trim_start().starts_with('(');
                match parse_a1_part(word) {
                    Some((col, row)) if !next_is_paren => {
                        push(&mut out, Tok::Ref { sheet: None, col, row })
                    }
                    _ => {
                        if word.contains('$') {
                            return Err(err(start, format!("invalid reference `{word}`")));
                        }
                        push(&mut out, Tok::Ident(word.to_ascii_uppercase()))
                    }
                }
                i = j;
            }
            _ => {
                let rest = &src[i..];
                let Some(op) = OPS.iter().find(|op| rest.starts_with(**op)) else {
                    return Err(err(start, format!("unexpected character `{c}`")));
                };
                push(&mut out, Tok::Op(op));
                i += op.len();
            }
        }
    }
    Ok(out)
}

fn qualified_ref(src: &str, at: usize, sheet: String) -> Result<(Tok, usize), String> {
    let mut j = at;
    while let Some(ch) = src[j..].chars().next() {
        if ch.is_ascii_alphanumeric() || ch == '$' {
            j += 1;
        } else {
            break;
        }
    }
    let word = &src[at..j];
    let (col, row) =
        parse_a1_part(word).ok_or_else(|| format!("invalid reference `{sheet}!{word}`"))?;
    Ok((
        Tok::Ref {
            sheet: Some(sheet),
            col,
            row,
        },
        j,
    ))
}
