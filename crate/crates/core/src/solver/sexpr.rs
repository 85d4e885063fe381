//! Minimal s-expression reader for solver output.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

impl Sexpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(a) => Some(a),
            Sexpr::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(l) => Some(l),
            Sexpr::Atom(_) => None,
        }
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Atom(a) => write!(f, "{a}"),
            Sexpr::List(items) => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parse every top-level expression. `|quoted|` symbols lose their bars;
/// string literals keep their quotes; `;` starts a line comment.
pub fn parse_sexprs(text: &str) -> Result<Vec<Sexpr>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut stack: Vec<Vec<Sexpr>> = vec![Vec::new()];
    while i < chars.len() {
        let c = chars[i];
        match c {
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexpr::List(done));
                i += 1;
            }
            '|' => {
                let start = i + 1;
                let end = chars[start..].iter().position(|&c| c == '|').ok_or("unterminated `|`")? + start;
                stack.last_mut().expect("non-empty").push(Sexpr::Atom(chars[start..end].iter().collect()));
                i = end + 1;
            }
            '"' => {
                let mut j = i + 1;
                loop {
                    if j >= chars.len() {
                        return Err("unterminated string".into());
                    }
                    if chars[j] == '"' {
                        // "" is an escaped quote
                        if j + 1 < chars.len() && chars[j + 1] == '"' {
                            j += 2;
                            continue;
                        }
                        break;
                    }
                    j += 1;
                }
                stack.last_mut().expect("non-empty").push(Sexpr::Atom(chars[i..=j].iter().collect()));
                i = j + 1;
            }
            c if c.is_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], '(' | ')' | ';' | '|' | '"') {
                    i += 1;
                }
                stack.last_mut().expect("non-empty").push(Sexpr::Atom(chars[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().expect("top level"))
}
