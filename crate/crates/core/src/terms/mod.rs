//! The basic feasible functional term language.
//!
//! Terms are combinators in the style of the closure conditions that define
//! the class: basis functions, composition, expansion and limited recursion on
//! notation. A few applicative conveniences are admitted as well: `(x i)`
//! refers to number argument `i` of the enclosing context, and decimal
//! literals denote constant functionals. Both adapt to whatever number arity
//! the context provides.
//!
//! Every term denotes a functional of some rank `(k, l)`: `k` function
//! arguments, `l` number arguments. A term that only mentions oracles
//! `0..k` can be used at any function arity `>= k`; the extra oracles are
//! ignored.

mod eval;
mod oracle;
mod parse;

pub use eval::{
    eval, eval_builtin, CheckedTerm, CostLedger, EvalCtx, EvalError, EvalOptions, Functional, FunctionalRef, HostFn,
};
pub use oracle::{Oracle, OracleParseError};
pub use parse::{parse_term, term_from_sexpr};

use crate::nat::Nat;
use std::fmt;

/// Extended-basis primitives. They are trusted feasible functions rather
/// than terms derived from the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    Add,
    Mul,
    /// `|x|`
    Len,
    /// `floor(x / 2)`
    Half,
    /// `x ↾ y`, the `y` most significant bits of `x`.
    Msp,
    /// Truncated subtraction.
    Monus,
    Min,
    /// `condle(a, b, c, d) = c` if `a <= b`, else `d`.
    CondLe,
}

impl Builtin {
    pub const ALL: [Builtin; 8] = [
        Builtin::Add,
        Builtin::Mul,
        Builtin::Len,
        Builtin::Half,
        Builtin::Msp,
        Builtin::Monus,
        Builtin::Min,
        Builtin::CondLe,
    ];

    pub fn arity(self) -> usize {
        match self {
            Builtin::Len | Builtin::Half => 1,
            Builtin::CondLe => 4,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Add => "add",
            Builtin::Mul => "mul",
            Builtin::Len => "len",
            Builtin::Half => "half",
            Builtin::Msp => "msp",
            Builtin::Monus => "monus",
            Builtin::Min => "min",
            Builtin::CondLe => "condle",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// `o(x) = 0`
    Zero,
    /// `s0(x) = 2x`
    SuccZero,
    /// `s1(x) = 2x + 1`
    SuccOne,
    /// `i^n_k(x_1, ..., x_n) = x_k`, with `1 <= k <= n`.
    Proj { arity: usize, index: usize },
    /// `x # y = 2^(|x|·|y|)`
    Smash,
    /// `Ap(f_j, x) = f_j(x)`
    ApOracle(usize),
    Builtin(Builtin),
    /// Number argument `i` of the context.
    Var(usize),
    /// Constant functional.
    Lit(Nat),
    /// `F(f, x) = H(f, G_1(f, x), ..., G_m(f, x))`
    Comp { head: Box<Term>, args: Vec<Term> },
    /// `F(f, g, x, y) = G(f, x)`: `functions` trailing function arguments and
    /// `numbers` trailing number arguments are added and ignored.
    Expand { inner: Box<Term>, functions: usize, numbers: usize },
    /// Limited recursion on notation with separate even/odd steps:
    /// `F(x, 0) = G(x)`, `F(x, 2y) = H1(x, y, F(x, y))`,
    /// `F(x, 2y+1) = H2(x, y, F(x, y))`, `|F(x, y)| <= |K(x, y)|`.
    Lrn { g: Box<Term>, h1: Box<Term>, h2: Box<Term>, k: Box<Term> },
    /// Single-step form: `F(x, y) = H(x, y, F(x, floor(y/2)))` for `y > 0`.
    Lrn1 { g: Box<Term>, h: Box<Term>, k: Box<Term> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rank {
    pub functions: usize,
    pub numbers: usize,
}

impl Rank {
    pub const fn new(functions: usize, numbers: usize) -> Rank {
        Rank { functions, numbers }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.functions, self.numbers)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RankError {
    #[error("{path}: rank mismatch, found {found}, expected {expected}")]
    RankMismatch { path: String, found: Rank, expected: Rank },
    #[error("{path}: oracle index {index} not available (function arity {available})")]
    UnknownOracleIndex { path: String, index: usize, available: usize },
}

impl Term {
    pub fn proj(arity: usize, index: usize) -> Term {
        Term::Proj { arity, index }
    }

    pub fn lit(v: u64) -> Term {
        Term::Lit(Nat::from(v))
    }

    pub fn comp(head: Term, args: Vec<Term>) -> Term {
        Term::Comp { head: Box::new(head), args }
    }

    /// `H(args...)` for a builtin `H`.
    pub fn call(b: Builtin, args: Vec<Term>) -> Term {
        Term::comp(Term::Builtin(b), args)
    }

    /// `f_j(arg)`
    pub fn ap(j: usize, arg: Term) -> Term {
        Term::comp(Term::ApOracle(j), vec![arg])
    }

    pub fn expand(inner: Term, functions: usize, numbers: usize) -> Term {
        Term::Expand { inner: Box::new(inner), functions, numbers }
    }

    pub fn lrn(g: Term, h1: Term, h2: Term, k: Term) -> Term {
        Term::Lrn { g: Box::new(g), h1: Box::new(h1), h2: Box::new(h2), k: Box::new(k) }
    }

    pub fn lrn1(g: Term, h: Term, k: Term) -> Term {
        Term::Lrn1 { g: Box::new(g), h: Box::new(h), k: Box::new(k) }
    }

    /// Number arity for basis functions whose arity is fixed.
    fn fixed_numbers(&self) -> Option<usize> {
        match self {
            Term::Zero | Term::SuccZero | Term::SuccOne | Term::ApOracle(_) => Some(1),
            Term::Proj { arity, .. } => Some(*arity),
            Term::Smash => Some(2),
            Term::Builtin(b) => Some(b.arity()),
            _ => None,
        }
    }

    /// The least rank at which this term can be used.
    pub fn rank(&self) -> Rank {
        match self {
            Term::ApOracle(j) => Rank::new(j + 1, 1),
            Term::Var(i) => Rank::new(0, i + 1),
            Term::Lit(_) => Rank::new(0, 0),
            Term::Comp { head, args } => {
                let h = head.rank();
                args.iter().map(Term::rank).fold(Rank::new(h.functions, 0), |acc, r| {
                    Rank::new(acc.functions.max(r.functions), acc.numbers.max(r.numbers))
                })
            }
            Term::Expand { inner, functions, numbers } => {
                let r = inner.rank();
                Rank::new(r.functions + functions, r.numbers + numbers)
            }
            Term::Lrn { g, h1, h2, k } => recursion_rank(g, &[h1.as_ref(), h2.as_ref()], k),
            Term::Lrn1 { g, h, k } => recursion_rank(g, &[h], k),
            t => Rank::new(0, t.fixed_numbers().unwrap_or(0)),
        }
    }

    /// Nesting depth of oracle applications.
    pub fn ap_depth(&self) -> usize {
        match self {
            Term::ApOracle(_) => 1,
            Term::Comp { head, args } => {
                head.ap_depth() + args.iter().map(Term::ap_depth).max().unwrap_or(0)
            }
            Term::Expand { inner, .. } => inner.ap_depth(),
            Term::Lrn { g, h1, h2, k } => [g, h1, h2, k].iter().map(|t| t.ap_depth()).max().unwrap_or(0),
            Term::Lrn1 { g, h, k } => [g, h, k].iter().map(|t| t.ap_depth()).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + match self {
            Term::Comp { head, args } => head.size() + args.iter().map(Term::size).sum::<usize>(),
            Term::Expand { inner, .. } => inner.size(),
            Term::Lrn { g, h1, h2, k } => g.size() + h1.size() + h2.size() + k.size(),
            Term::Lrn1 { g, h, k } => g.size() + h.size() + k.size(),
            _ => 0,
        }
    }
}

fn recursion_rank(g: &Term, hs: &[&Term], k: &Term) -> Rank {
    let g = g.rank();
    let k = k.rank();
    let mut functions = g.functions.max(k.functions);
    let mut numbers = (g.numbers + 1).max(k.numbers);
    for h in hs {
        let r = h.rank();
        functions = functions.max(r.functions);
        numbers = numbers.max(r.numbers.saturating_sub(1));
    }
    Rank::new(functions, numbers.max(1))
}

/// Checks that `t` is well-formed at rank `expected`. Collects every error
/// rather than stopping at the first.
pub fn validate_term(t: &Term, expected: Rank) -> Result<(), Vec<RankError>> {
    let mut errors = Vec::new();
    check(t, expected, "$", &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn check(t: &Term, want: Rank, path: &str, errors: &mut Vec<RankError>) {
    let mismatch = |found: Rank| RankError::RankMismatch { path: path.to_string(), found, expected: want };
    match t {
        Term::ApOracle(j) => {
            if want.numbers != 1 {
                errors.push(mismatch(t.rank()));
            }
            if *j >= want.functions {
                errors.push(RankError::UnknownOracleIndex {
                    path: path.to_string(),
                    index: *j,
                    available: want.functions,
                });
            }
        }
        Term::Proj { arity, index } if *index == 0 || index > arity => {
            errors.push(mismatch(Rank::new(0, *arity)));
        }
        Term::Var(i) => {
            if *i >= want.numbers {
                errors.push(mismatch(t.rank()));
            }
        }
        Term::Lit(_) => {}
        Term::Comp { head, args } => {
            check(head, Rank::new(want.functions, args.len()), &format!("{path}.head"), errors);
            for (i, a) in args.iter().enumerate() {
                check(a, want, &format!("{path}.args[{i}]"), errors);
            }
        }
        Term::Expand { inner, functions, numbers } => {
            if *functions > want.functions || *numbers > want.numbers {
                errors.push(mismatch(t.rank()));
            } else {
                let inner_rank = Rank::new(want.functions - functions, want.numbers - numbers);
                check(inner, inner_rank, &format!("{path}.inner"), errors);
            }
        }
        Term::Lrn { g, h1, h2, k } => {
            if want.numbers == 0 {
                errors.push(mismatch(t.rank()));
                return;
            }
            check_recursion(g, &[("h1", h1), ("h2", h2)], k, want, path, errors);
        }
        Term::Lrn1 { g, h, k } => {
            if want.numbers == 0 {
                errors.push(mismatch(t.rank()));
                return;
            }
            check_recursion(g, &[("h", h)], k, want, path, errors);
        }
        _ => {
            let n = t.fixed_numbers().expect("basis function");
            if n != want.numbers {
                errors.push(mismatch(Rank::new(0, n)));
            }
        }
    }
}

fn check_recursion(
    g: &Term,
    hs: &[(&str, &Term)],
    k: &Term,
    want: Rank,
    path: &str,
    errors: &mut Vec<RankError>,
) {
    let f = want.functions;
    check(g, Rank::new(f, want.numbers - 1), &format!("{path}.g"), errors);
    for (name, h) in hs {
        check(h, Rank::new(f, want.numbers + 1), &format!("{path}.{name}"), errors);
    }
    check(k, want, &format!("{path}.k"), errors);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smash_of_projections() -> Term {
        Term::comp(Term::Smash, vec![Term::proj(2, 1), Term::proj(2, 2)])
    }

    #[test]
    fn basis_ranks() {
        assert_eq!(Term::Zero.rank(), Rank::new(0, 1));
        assert!(validate_term(&Term::Zero, Rank::new(0, 1)).is_ok());
        assert_eq!(Term::ApOracle(0).rank(), Rank::new(1, 1));
        assert!(validate_term(&Term::ApOracle(0), Rank::new(1, 1)).is_ok());
    }

    #[test]
    fn composition_rank() {
        let t = smash_of_projections();
        assert!(validate_term(&t, Rank::new(0, 2)).is_ok());
        assert_eq!(t.rank(), Rank::new(0, 2));
        assert!(validate_term(&t, Rank::new(0, 3)).is_err());
    }

    #[test]
    fn expansion_rank() {
        let t = Term::expand(Term::ApOracle(0), 1, 2);
        assert_eq!(t.rank(), Rank::new(2, 3));
        assert!(validate_term(&t, Rank::new(2, 3)).is_ok());
        assert!(validate_term(&t, Rank::new(2, 2)).is_err());
    }

    #[test]
    fn recursion_arity_rule() {
        // F of rank (0,2): G (0,1), H1/H2 (0,3), K (0,2).
        let g = Term::Var(0);
        let h = Term::Var(2);
        let k = Term::call(Builtin::Add, vec![Term::Var(0), Term::Var(1)]);
        let ok = Term::lrn(g.clone(), h.clone(), h.clone(), k.clone());
        assert!(validate_term(&ok, Rank::new(0, 2)).is_ok());
        assert_eq!(ok.rank(), Rank::new(0, 2));

        // H1 with rank (k, l+1) instead of (k, l+2).
        let bad_h1 = Term::comp(Term::Smash, vec![Term::proj(2, 1), Term::proj(2, 2)]);
        let bad = Term::lrn(g, bad_h1, h, k);
        let errs = validate_term(&bad, Rank::new(0, 2)).unwrap_err();
        assert!(matches!(&errs[0], RankError::RankMismatch { path, .. } if path.starts_with("$.h1")));
    }

    #[test]
    fn unknown_oracle() {
        let t = Term::ap(1, Term::Var(0));
        let errs = validate_term(&t, Rank::new(1, 1)).unwrap_err();
        assert!(matches!(errs[0], RankError::UnknownOracleIndex { index: 1, .. }));
        assert!(validate_term(&t, Rank::new(2, 1)).is_ok());
    }

    #[test]
    fn bad_projection() {
        assert!(validate_term(&Term::proj(2, 0), Rank::new(0, 2)).is_err());
        assert!(validate_term(&Term::proj(2, 3), Rank::new(0, 2)).is_err());
    }
}
