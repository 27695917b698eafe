//! Second-order polynomials over `|x_i|` and `|f_j|(·)`.

mod regular;
mod witness;

pub use regular::{chain_holds, is_regular, norm_apps_by_depth, regularize};
pub use witness::{witness_check, witness_terms, Disagreement, WitnessConfig, WitnessReport, WitnessTerms};

use crate::nat::{len, Nat};
use crate::sexpr::{parse_single, Located, ParseError};
use crate::terms::Oracle;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul};

/// Default limit on the argument of the brute-force norm: it enumerates
/// `2^x` points.
pub const DEFAULT_NORM_CAP: u64 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sop {
    Const(u64),
    /// `|x_i|`
    LenVar(usize),
    Plus(Box<Sop>, Box<Sop>),
    Times(Box<Sop>, Box<Sop>),
    /// `|f_j|(P)`
    NormApp(usize, Box<Sop>),
}

impl Add for Sop {
    type Output = Sop;
    fn add(self, rhs: Sop) -> Sop {
        Sop::Plus(Box::new(self), Box::new(rhs))
    }
}

impl Mul for Sop {
    type Output = Sop;
    fn mul(self, rhs: Sop) -> Sop {
        Sop::Times(Box::new(self), Box::new(rhs))
    }
}

impl Sop {
    pub fn c(n: u64) -> Sop {
        Sop::Const(n)
    }

    pub fn lx(i: usize) -> Sop {
        Sop::LenVar(i)
    }

    pub fn nf(j: usize, arg: Sop) -> Sop {
        Sop::NormApp(j, Box::new(arg))
    }

    /// Maximal nesting of `|f_j|(·)`.
    pub fn depth(&self) -> usize {
        match self {
            Sop::Const(_) | Sop::LenVar(_) => 0,
            Sop::Plus(p, q) | Sop::Times(p, q) => p.depth().max(q.depth()),
            Sop::NormApp(_, p) => p.depth() + 1,
        }
    }

    /// One more than the largest `|x_i|` index, or 0.
    pub fn num_vars(&self) -> usize {
        match self {
            Sop::Const(_) => 0,
            Sop::LenVar(i) => i + 1,
            Sop::Plus(p, q) | Sop::Times(p, q) => p.num_vars().max(q.num_vars()),
            Sop::NormApp(_, p) => p.num_vars(),
        }
    }

    /// One more than the largest function index, or 0.
    pub fn num_functions(&self) -> usize {
        match self {
            Sop::Const(_) | Sop::LenVar(_) => 0,
            Sop::Plus(p, q) | Sop::Times(p, q) => p.num_functions().max(q.num_functions()),
            Sop::NormApp(j, p) => (j + 1).max(p.num_functions()),
        }
    }

    /// Replaces every `|x_i|` by `subst[i]`.
    pub fn substitute(&self, subst: &[Sop]) -> Sop {
        match self {
            Sop::Const(n) => Sop::Const(*n),
            Sop::LenVar(i) => subst[*i].clone(),
            Sop::Plus(p, q) => p.substitute(subst) + q.substitute(subst),
            Sop::Times(p, q) => p.substitute(subst) * q.substitute(subst),
            Sop::NormApp(j, p) => Sop::nf(*j, p.substitute(subst)),
        }
    }

    /// Visits every subpolynomial, parents before children, left to right.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Sop)) {
        f(self);
        match self {
            Sop::Plus(p, q) | Sop::Times(p, q) => {
                p.visit(f);
                q.visit(f);
            }
            Sop::NormApp(_, p) => p.visit(f),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SopError {
    #[error("norm argument {x} exceeds the brute-force cap {cap}")]
    NormCapExceeded { x: u64, cap: u64 },
    #[error("variable |x{0}| is not assigned")]
    UnassignedVar(usize),
    #[error("function variable f{0} is not assigned")]
    UnassignedFunction(usize),
    #[error("polynomial value overflows 64 bits")]
    Overflow,
    #[error("polynomial is not regular")]
    NotRegular,
    #[error("witness search space too large: {estimate} exceeds cap {cap}")]
    SearchSpaceTooLarge { estimate: u128, cap: u128 },
    #[error("witness term evaluation failed: {0}")]
    Eval(#[from] crate::terms::EvalError),
}

/// How `|f|(x)` is computed during polynomial evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMethod {
    /// Enumerate all `y < 2^x`, refusing arguments above the cap.
    #[default]
    BruteForce,
    /// Read the answer off the oracle table ([`Oracle::norm_exact`]).
    Table,
}

/// Values for the variables of a polynomial.
#[derive(Debug, Clone)]
pub struct SopEnv<'a> {
    /// `|x_i|` for each `i`.
    pub lens: Vec<u64>,
    /// `f_j` for each `j`.
    pub functions: &'a [Oracle],
    pub norm_cap: u64,
    pub method: NormMethod,
}

impl<'a> SopEnv<'a> {
    pub fn new(lens: Vec<u64>, functions: &'a [Oracle]) -> Self {
        SopEnv { lens, functions, norm_cap: DEFAULT_NORM_CAP, method: NormMethod::BruteForce }
    }

    /// Environment for number arguments `xs`, assigning `|x_i|`.
    pub fn for_args(xs: &[Nat], functions: &'a [Oracle]) -> Self {
        SopEnv::new(xs.iter().map(len).collect(), functions)
    }

    pub fn with_method(mut self, method: NormMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.norm_cap = cap;
        self
    }
}

/// `|f|(x) = max over |y| <= x of |f(y)|`, by enumerating `0 <= y < 2^x`.
pub fn norm(f: &Oracle, x: u64, cap: u64) -> Result<u64, SopError> {
    if x > cap || x >= 64 {
        return Err(SopError::NormCapExceeded { x, cap });
    }
    let mut best = 0;
    let mut y = Nat::default();
    for _ in 0..(1u64 << x) {
        best = best.max(len(&f.value(&y)));
        y += 1u32;
    }
    Ok(best)
}

/// Evaluates `p` in `env`.
pub fn sop_eval(p: &Sop, env: &SopEnv) -> Result<u64, SopError> {
    let mut memo = HashMap::new();
    eval_inner(p, env, &mut memo)
}

fn eval_inner(p: &Sop, env: &SopEnv, memo: &mut HashMap<(usize, u64), u64>) -> Result<u64, SopError> {
    Ok(match p {
        Sop::Const(n) => *n,
        Sop::LenVar(i) => *env.lens.get(*i).ok_or(SopError::UnassignedVar(*i))?,
        Sop::Plus(a, b) => eval_inner(a, env, memo)?
            .checked_add(eval_inner(b, env, memo)?)
            .ok_or(SopError::Overflow)?,
        Sop::Times(a, b) => eval_inner(a, env, memo)?
            .checked_mul(eval_inner(b, env, memo)?)
            .ok_or(SopError::Overflow)?,
        Sop::NormApp(j, a) => {
            let f = env.functions.get(*j).ok_or(SopError::UnassignedFunction(*j))?;
            let x = eval_inner(a, env, memo)?;
            if let Some(v) = memo.get(&(*j, x)) {
                return Ok(*v);
            }
            let v = match env.method {
                NormMethod::BruteForce => norm(f, x, env.norm_cap)?,
                NormMethod::Table => f.norm_exact(x),
            };
            memo.insert((*j, x), v);
            v
        }
    })
}

/// Parses `(c n)`, `(lx i)`, `(+ P Q ...)`, `(* P Q ...)`, `(nf j P)`.
pub fn parse_sop(src: &str) -> Result<Sop, ParseError> {
    sop_from_sexpr(&parse_single(src)?)
}

pub fn sop_from_sexpr(e: &Located) -> Result<Sop, ParseError> {
    let c = &e.children;
    let num = |x: &Located| -> Result<u64, ParseError> {
        x.atom().and_then(|a| a.parse().ok()).ok_or_else(|| x.err("expected a natural"))
    };
    match e.head() {
        Some("c") if c.len() == 2 => Ok(Sop::Const(num(&c[1])?)),
        Some("lx") if c.len() == 2 => Ok(Sop::LenVar(num(&c[1])? as usize)),
        Some("nf") if c.len() == 3 => Ok(Sop::nf(num(&c[1])? as usize, sop_from_sexpr(&c[2])?)),
        Some(op @ ("+" | "*")) if c.len() >= 3 => {
            let mut parts = c[1..].iter().map(sop_from_sexpr);
            let first = parts.next().unwrap()?;
            parts.try_fold(first, |acc, p| Ok(if op == "+" { acc + p? } else { acc * p? }))
        }
        Some(h) => Err(e.err(format!("malformed polynomial form '{h}'"))),
        None => Err(e.err("expected a polynomial form")),
    }
}

impl fmt::Display for Sop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sop::Const(n) => write!(f, "(c {n})"),
            Sop::LenVar(i) => write!(f, "(lx {i})"),
            Sop::Plus(p, q) => write!(f, "(+ {p} {q})"),
            Sop::Times(p, q) => write!(f, "(* {p} {q})"),
            Sop::NormApp(j, p) => write!(f, "(nf {j} {p})"),
        }
    }
}
