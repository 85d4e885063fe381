use super::{Diagnostic, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Integer literal value and whether it carried a `u`/`U` suffix.
    Int(u64, bool),
    /// Character literal, already converted to its code.
    Char(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest first so that greedy matching works.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "(", ")", "{", "}", "[", "]", ";", ",", ".", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&",
    "|", "^", ":", "?",
];

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            bump!(1);
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!(1);
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = Pos { line, col };
            bump!(2);
            loop {
                if i + 1 >= bytes.len() {
                    return Err(Diagnostic::syntax(start, "unterminated block comment"));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    bump!(2);
                    break;
                }
                bump!(1);
            }
            continue;
        }
        if c == b'#' {
            return Err(Diagnostic::unsupported(Pos { line, col }, "preprocessor directive"));
        }
        let pos = Pos { line, col };
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                bump!(1);
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), pos });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let (radix, digits_start) = if c == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X')) {
                bump!(2);
                (16, i)
            } else {
                (10, i)
            };
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                bump!(1);
            }
            let text = &src[digits_start..i];
            let trimmed = text.trim_end_matches(['u', 'U', 'l', 'L']);
            let suffix = &text[trimmed.len()..];
            if suffix.contains(['l', 'L']) {
                return Err(Diagnostic::unsupported(pos, "long integer literal"));
            }
            let unsigned = !suffix.is_empty();
            // Octal literals are not part of the grammar; a leading zero is decimal.
            let value = u64::from_str_radix(trimmed, radix)
                .map_err(|_| Diagnostic::syntax(pos, format!("malformed integer literal `{}`", &src[start..i])))?;
            if value > u64::from(u32::MAX) {
                return Err(Diagnostic::syntax(pos, "integer literal does not fit in 32 bits"));
            }
            out.push(Token { tok: Tok::Int(value, unsigned), pos });
            continue;
        }
        if c == b'\'' {
            bump!(1);
            let value = match bytes.get(i) {
                Some(b'\\') => {
                    bump!(1);
                    let esc = *bytes.get(i).ok_or_else(|| Diagnostic::syntax(pos, "unterminated character literal"))?;
                    bump!(1);
                    match esc {
                        b'n' => 10,
                        b't' => 9,
                        b'r' => 13,
                        b'0' => 0,
                        b'\\' => 92,
                        b'\'' => 39,
                        b'"' => 34,
                        _ => return Err(Diagnostic::syntax(pos, "unknown escape in character literal")),
                    }
                }
                Some(&ch) if ch != b'\'' && ch.is_ascii() => {
                    bump!(1);
                    i64::from(ch)
                }
                _ => return Err(Diagnostic::syntax(pos, "malformed character literal")),
            };
            if bytes.get(i) != Some(&b'\'') {
                return Err(Diagnostic::syntax(pos, "unterminated character literal"));
            }
            bump!(1);
            out.push(Token { tok: Tok::Char(value), pos });
            continue;
        }
        if c == b'"' {
            return Err(Diagnostic::unsupported(pos, "string literal"));
        }
        let rest = &src[i..];
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                bump!(p.len());
                out.push(Token { tok: Tok::Punct(p), pos });
            }
            None => {
                let ch = rest.chars().next().unwrap_or('?');
                return Err(Diagnostic::syntax(pos, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("x<<=0x1F; // c\n/* b */ a->b"),
            vec![
                Tok::Ident("x".into()),
                Tok::Punct("<<="),
                Tok::Int(31, false),
                Tok::Punct(";"),
                Tok::Ident("a".into()),
                Tok::Punct("->"),
                Tok::Ident("b".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn char_and_suffix() {
        assert_eq!(toks("'a' 10u '\\n'"), vec![Tok::Char(97), Tok::Int(10, true), Tok::Char(10), Tok::Eof]);
    }

    #[test]
    fn positions_track_lines() {
        let t = lex("a\n  b").unwrap();
        assert_eq!(t[1].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn rejects_preprocessor() {
        let e = lex("#define X 1").unwrap_err();
        assert!(e.message.contains("preprocessor"));
    }
}
