//! Minimal s-expression reader shared by the term, polynomial and scheme
//! file formats.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, msg: impl Into<String>) -> Self {
        ParseError { line, msg: msg.into() }
    }
}

/// An s-expression together with the line it started on.
#[derive(Debug, Clone)]
pub struct Located {
    pub line: usize,
    pub expr: Sexpr,
    pub children: Vec<Located>,
}

impl Located {
    pub fn atom(&self) -> Option<&str> {
        match &self.expr {
            Sexpr::Atom(a) => Some(a),
            Sexpr::List(_) => None,
        }
    }

    pub fn is_list(&self) -> bool {
        matches!(self.expr, Sexpr::List(_))
    }

    pub fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, msg)
    }

    /// Head atom of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.children.first().and_then(|c| c.atom())
    }

    /// Splits `(head :key v :key v ...)` into keyword pairs.
    pub fn keywords(&self) -> Result<Vec<(&str, &Located)>, ParseError> {
        let rest = &self.children[1..];
        if !rest.len().is_multiple_of(2) {
            return Err(self.err("keyword list has odd length"));
        }
        rest.chunks(2)
            .map(|kv| match kv[0].atom() {
                Some(k) if k.starts_with(':') => Ok((&k[1..], &kv[1])),
                _ => Err(kv[0].err("expected :keyword")),
            })
            .collect()
    }
}

/// Reads every top-level expression in `src`. `;` and `#` start comments.
pub fn parse_all(src: &str) -> Result<Vec<Located>, ParseError> {
    let mut tokens = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split([';', '#']).next().unwrap_or("");
        let mut cur = String::new();
        for ch in line.chars() {
            match ch {
                '(' | ')' => {
                    if !cur.is_empty() {
                        tokens.push((i + 1, std::mem::take(&mut cur)));
                    }
                    tokens.push((i + 1, ch.to_string()));
                }
                c if c.is_whitespace() => {
                    if !cur.is_empty() {
                        tokens.push((i + 1, std::mem::take(&mut cur)));
                    }
                }
                c => cur.push(c),
            }
        }
        if !cur.is_empty() {
            tokens.push((i + 1, cur));
        }
    }
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        out.push(parse_one(&tokens, &mut pos)?);
    }
    Ok(out)
}

/// Reads exactly one expression.
pub fn parse_single(src: &str) -> Result<Located, ParseError> {
    let mut all = parse_all(src)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(ParseError::new(1, "empty input")),
        _ => Err(ParseError::new(all[1].line, "trailing expression")),
    }
}

fn parse_one(tokens: &[(usize, String)], pos: &mut usize) -> Result<Located, ParseError> {
    let (line, tok) = &tokens[*pos];
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut children = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(ParseError::new(*line, "unclosed '('")),
                    Some((_, t)) if t == ")" => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => children.push(parse_one(tokens, pos)?),
                }
            }
            let expr = Sexpr::List(children.iter().map(|c| c.expr.clone()).collect());
            Ok(Located { line: *line, expr, children })
        }
        ")" => Err(ParseError::new(*line, "unexpected ')'")),
        a => Ok(Located { line: *line, expr: Sexpr::Atom(a.to_string()), children: Vec::new() }),
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_and_comments() {
        let e = parse_single("(comp smash ; head\n (proj 2 1) (proj 2 2))").unwrap();
        assert_eq!(e.children.len(), 4);
        assert_eq!(e.children[2].line, 2);
        assert_eq!(e.expr.to_string(), "(comp smash (proj 2 1) (proj 2 2))");
    }

    #[test]
    fn unbalanced() {
        assert!(parse_single("(a (b)").is_err());
        assert!(parse_single("a)").is_err());
        assert!(parse_single("").is_err());
    }

    #[test]
    fn keywords() {
        let e = parse_single("(lrn1 :g 0 :h o :k o)").unwrap();
        let kw = e.keywords().unwrap();
        assert_eq!(kw.iter().map(|(k, _)| *k).collect::<Vec<_>>(), ["g", "h", "k"]);
    }
}
