//! Random polynomials, oracles, terms and recursion systems.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::nat::Nat;
use crate::sop::Sop;
use crate::terms::{Builtin, Oracle, Term};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A polynomial of depth at most `depth` over `|x_0| .. |x_{vars-1}|` and
/// `|f_0| .. |f_{functions-1}|`, with constants at most `const_max`.
pub fn sop(rng: &mut StdRng, depth: usize, vars: usize, functions: usize, const_max: u64) -> Sop {
    let leaf = |rng: &mut StdRng| {
        if vars > 0 && rng.gen_bool(0.6) {
            Sop::lx(rng.gen_range(0..vars))
        } else {
            Sop::c(rng.gen_range(0..=const_max))
        }
    };
    fn go(rng: &mut StdRng, depth: usize, size: usize, functions: usize, leaf: &dyn Fn(&mut StdRng) -> Sop) -> Sop {
        if size == 0 {
            return leaf(rng);
        }
        match rng.gen_range(0..10) {
            0..=2 if depth > 0 && functions > 0 => {
                Sop::nf(rng.gen_range(0..functions), go(rng, depth - 1, size - 1, functions, leaf))
            }
            3..=5 => go(rng, depth, size - 1, functions, leaf) + go(rng, depth, size - 1, functions, leaf),
            6 | 7 => go(rng, depth, size - 1, functions, leaf) * go(rng, depth, size - 1, functions, leaf),
            _ => leaf(rng),
        }
    }
    go(rng, depth, 3, functions, &leaf)
}

/// Like [`sop`] but with depth exactly `depth` when `functions > 0`.
pub fn sop_of_depth(rng: &mut StdRng, depth: usize, vars: usize, functions: usize, const_max: u64) -> Sop {
    loop {
        let p = sop(rng, depth, vars, functions, const_max);
        if p.depth() == depth || functions == 0 {
            return p;
        }
    }
}

/// A table on `0..domain` with values in `0..=max_value`, and `default`
/// elsewhere.
pub fn table(rng: &mut StdRng, domain: u64, max_value: u64, default: u64) -> Oracle {
    Oracle::from_pairs((0..domain).map(|k| (k, rng.gen_range(0..=max_value))), default)
}

/// Every table on `0..domain` with values in `0..=max_value`.
pub fn all_tables(domain: u64, max_value: u64, default: u64) -> Vec<Oracle> {
    let base = max_value + 1;
    let count = base.pow(domain as u32);
    (0..count)
        .map(|mut code| {
            let pairs: Vec<(u64, u64)> = (0..domain)
                .map(|k| {
                    let v = code % base;
                    code /= base;
                    (k, v)
                })
                .collect();
            Oracle::from_pairs(pairs, default)
        })
        .collect()
}

pub fn nats(rng: &mut StdRng, n: usize, below: u64) -> Vec<Nat> {
    (0..n).map(|_| Nat::from(rng.gen_range(0..below))).collect()
}

const UNARY: [Term; 5] = [
    Term::Zero,
    Term::SuccZero,
    Term::SuccOne,
    Term::Builtin(Builtin::Half),
    Term::Builtin(Builtin::Len),
];

const BINARY: [Term; 6] = [
    Term::Smash,
    Term::Builtin(Builtin::Add),
    Term::Builtin(Builtin::Mul),
    Term::Builtin(Builtin::Msp),
    Term::Builtin(Builtin::Monus),
    Term::Builtin(Builtin::Min),
];

/// A term at rank `(functions, numbers)` whose nesting depth is at most
/// `depth`. Recursion schemes and expansion appear as heads of
/// compositions.
pub fn term(rng: &mut StdRng, functions: usize, numbers: usize, depth: usize) -> Term {
    let leaf = |rng: &mut StdRng| {
        if numbers > 0 && rng.gen_bool(0.75) {
            Term::Var(rng.gen_range(0..numbers))
        } else {
            Term::lit(rng.gen_range(0..8u64))
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    let sub = |rng: &mut StdRng| term(rng, functions, numbers, depth - 1);
    match rng.gen_range(0..20) {
        0..=2 => leaf(rng),
        3..=5 => {
            let head = UNARY[rng.gen_range(0..UNARY.len())].clone();
            Term::comp(head, vec![sub(rng)])
        }
        6..=10 => {
            let head = BINARY[rng.gen_range(0..BINARY.len())].clone();
            Term::comp(head, vec![sub(rng), sub(rng)])
        }
        11 => Term::call(Builtin::CondLe, (0..4).map(|_| sub(rng)).collect()),
        12 => {
            let arity = rng.gen_range(1..=3);
            let k = rng.gen_range(1..=arity);
            Term::comp(Term::proj(arity, k), (0..arity).map(|_| sub(rng)).collect())
        }
        13..=15 if functions > 0 => Term::ap(rng.gen_range(0..functions), sub(rng)),
        16 | 17 => {
            // recursion on notation over one parameter and the recursion variable
            let g = term(rng, functions, 1, depth - 1);
            let k = term(rng, functions, 2, depth - 1);
            let scheme = if rng.gen_bool(0.5) {
                Term::lrn1(g, term(rng, functions, 3, depth - 1), k)
            } else {
                Term::lrn(g, term(rng, functions, 3, depth - 1), term(rng, functions, 3, depth - 1), k)
            };
            Term::comp(scheme, vec![sub(rng), sub(rng)])
        }
        18 => {
            let inner = term(rng, functions, 1, depth - 1);
            Term::comp(Term::expand(inner, 0, 1), vec![sub(rng), sub(rng)])
        }
        _ => leaf(rng),
    }
}
