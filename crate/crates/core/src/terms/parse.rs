use super::{Builtin, Term};
use crate::nat::Nat;
use crate::sexpr::{parse_single, Located, ParseError};
use std::fmt;
use std::str::FromStr;

/// Parses the textual term grammar:
///
/// ```text
/// term := o | s0 | s1 | smash | add | mul | len | half | msp | monus | min | condle
///       | <decimal>                       constant
///       | (x i)                           number argument i
///       | (proj n k)
///       | (ap j <term>)                   f_j applied to <term>
///       | (oracle j)                      the bare application functional of f_j
///       | (comp <h> <g1> ... <gm>)
///       | (expand <term> k l)
///       | (lrn :g <t> :h1 <t> :h2 <t> :k <t>)
///       | (lrn1 :g <t> :h <t> :k <t>)
/// ```
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    term_from_sexpr(&parse_single(src)?)
}

fn index(e: &Located) -> Result<usize, ParseError> {
    e.atom()
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| e.err("expected an index"))
}

pub fn term_from_sexpr(e: &Located) -> Result<Term, ParseError> {
    if let Some(a) = e.atom() {
        return match a {
            "o" => Ok(Term::Zero),
            "s0" => Ok(Term::SuccZero),
            "s1" => Ok(Term::SuccOne),
            "smash" => Ok(Term::Smash),
            _ => {
                if let Some(b) = Builtin::from_name(a) {
                    Ok(Term::Builtin(b))
                } else if let Ok(n) = Nat::from_str(a) {
                    Ok(Term::Lit(n))
                } else {
                    Err(e.err(format!("unknown atom '{a}'")))
                }
            }
        };
    }
    let c = &e.children;
    let head = e.head().ok_or_else(|| e.err("expected a head symbol"))?;
    let want = |n: usize| {
        if c.len() == n {
            Ok(())
        } else {
            Err(e.err(format!("'{head}' takes {} operands", n - 1)))
        }
    };
    match head {
        "x" => {
            want(2)?;
            Ok(Term::Var(index(&c[1])?))
        }
        "proj" => {
            want(3)?;
            Ok(Term::proj(index(&c[1])?, index(&c[2])?))
        }
        "ap" => {
            want(3)?;
            Ok(Term::ap(index(&c[1])?, term_from_sexpr(&c[2])?))
        }
        "oracle" => {
            want(2)?;
            Ok(Term::ApOracle(index(&c[1])?))
        }
        "comp" => {
            if c.len() < 2 {
                return Err(e.err("'comp' needs a head"));
            }
            let args = c[2..].iter().map(term_from_sexpr).collect::<Result<_, _>>()?;
            Ok(Term::comp(term_from_sexpr(&c[1])?, args))
        }
        "expand" => {
            want(4)?;
            Ok(Term::expand(term_from_sexpr(&c[1])?, index(&c[2])?, index(&c[3])?))
        }
        "lrn" | "lrn1" => {
            let names: &[&str] = if head == "lrn" { &["g", "h1", "h2", "k"] } else { &["g", "h", "k"] };
            let mut parts: Vec<Option<Term>> = vec![None; names.len()];
            for (key, val) in e.keywords()? {
                let slot = names
                    .iter()
                    .position(|n| *n == key)
                    .ok_or_else(|| val.err(format!("unknown keyword :{key} for '{head}'")))?;
                if parts[slot].replace(term_from_sexpr(val)?).is_some() {
                    return Err(val.err(format!("duplicate :{key}")));
                }
            }
            let mut parts = parts
                .into_iter()
                .zip(names)
                .map(|(p, n)| p.ok_or_else(|| e.err(format!("missing :{n}"))))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter();
            let mut next = || parts.next().unwrap();
            if head == "lrn" {
                Ok(Term::lrn(next(), next(), next(), next()))
            } else {
                Ok(Term::lrn1(next(), next(), next()))
            }
        }
        other => Err(e.err(format!("unknown form '{other}'"))),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Zero => write!(f, "o"),
            Term::SuccZero => write!(f, "s0"),
            Term::SuccOne => write!(f, "s1"),
            Term::Proj { arity, index } => write!(f, "(proj {arity} {index})"),
            Term::Smash => write!(f, "smash"),
            Term::ApOracle(j) => write!(f, "(oracle {j})"),
            Term::Builtin(b) => write!(f, "{}", b.name()),
            Term::Var(i) => write!(f, "(x {i})"),
            Term::Lit(n) => write!(f, "{n}"),
            Term::Comp { head, args } => {
                if let (Term::ApOracle(j), [arg]) = (head.as_ref(), args.as_slice()) {
                    return write!(f, "(ap {j} {arg})");
                }
                write!(f, "(comp {head}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Term::Expand { inner, functions, numbers } => write!(f, "(expand {inner} {functions} {numbers})"),
            Term::Lrn { g, h1, h2, k } => write!(f, "(lrn :g {g} :h1 {h1} :h2 {h2} :k {k})"),
            Term::Lrn1 { g, h, k } => write!(f, "(lrn1 :g {g} :h {h} :k {k})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let src = "(lrn1 :g 0 :h (comp add (x 1) 1) :k (comp add (x 0) 1))";
        let t = parse_term(src).unwrap();
        assert!(matches!(t, Term::Lrn1 { .. }));
        assert_eq!(t.to_string(), src);

        let t = parse_term("(comp smash (proj 2 1) (proj 2 2))").unwrap();
        assert_eq!(t, Term::comp(Term::Smash, vec![Term::proj(2, 1), Term::proj(2, 2)]));

        let t = parse_term("(expand (ap 0 (x 0)) 1 2)").unwrap();
        assert_eq!(t, Term::expand(Term::ap(0, Term::Var(0)), 1, 2));
        assert_eq!(parse_term("(oracle 0)").unwrap(), Term::ApOracle(0));
    }

    #[test]
    fn errors_carry_lines() {
        let err = parse_term("(comp add\n (bogus 1))").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(parse_term("(lrn1 :g 0 :h 0)").is_err());
        assert!(parse_term("(proj 2)").is_err());
        assert!(parse_term("frob").is_err());
    }
}
