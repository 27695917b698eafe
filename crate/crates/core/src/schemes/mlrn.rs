//! Multiple limited recursion on notation, eliminated into one limited
//! recursion over sequence codes.
//!
//! Argument conventions for a system of `n` functionals with parameters `α`:
//! `G_i(α)`, `H_i(u, p_1, ..., p_n, α)` and `K_i(u, α, v_1, ..., v_{i-1})`,
//! where `p_j = F_j(⌊u/2⌋, α)` and `v_j = F_j(u, α)`.

use std::rc::Rc;

use num_traits::Zero;

use super::seq::{seq_get, SequenceCode};
use super::{bound_value, sqbd, SchemeError};
use crate::nat::{len, monus, Nat};
use crate::terms::{CheckedTerm, EvalCtx, EvalError, Functional, FunctionalRef, HostFn, Oracle, Rank, Term};

#[derive(Clone)]
pub struct MlrnSystem {
    pub functions: usize,
    pub params: usize,
    pub g: Vec<FunctionalRef>,
    pub h: Vec<FunctionalRef>,
    pub k: Vec<FunctionalRef>,
}

impl std::fmt::Debug for MlrnSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MlrnSystem(n={}, rank=({},{}))", self.len(), self.functions, self.params)
    }
}

fn prefixes(u: &Nat) -> impl Iterator<Item = Nat> + '_ {
    let n = len(u);
    (0..=n).map(move |i| u >> (n - i))
}

impl MlrnSystem {
    pub fn new(
        functions: usize,
        params: usize,
        g: Vec<FunctionalRef>,
        h: Vec<FunctionalRef>,
        k: Vec<FunctionalRef>,
    ) -> Result<MlrnSystem, SchemeError> {
        let sys = MlrnSystem { functions, params, g, h, k };
        sys.check()?;
        Ok(sys)
    }

    /// Builds a system from terms, validating each at its required rank.
    pub fn from_terms(
        functions: usize,
        params: usize,
        g: Vec<Term>,
        h: Vec<Term>,
        k: Vec<Term>,
    ) -> Result<MlrnSystem, SchemeError> {
        let n = g.len();
        let wrap = |ts: Vec<Term>, numbers: &dyn Fn(usize) -> usize| -> Result<Vec<FunctionalRef>, SchemeError> {
            ts.into_iter()
                .enumerate()
                .map(|(i, t)| {
                    CheckedTerm::new(t, Rank::new(functions, numbers(i)))
                        .map(CheckedTerm::into_ref)
                        .map_err(|e| SchemeError::Eval(EvalError::Invalid(e)))
                })
                .collect()
        };
        let g = wrap(g, &|_| params)?;
        let h = wrap(h, &|_| 1 + n + params)?;
        let k = wrap(k, &|i| 1 + params + i)?;
        MlrnSystem::new(functions, params, g, h, k)
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    fn check(&self) -> Result<(), SchemeError> {
        let n = self.len();
        if n == 0 || self.h.len() != n || self.k.len() != n {
            return Err(SchemeError::IllFormed(format!(
                "need equally many G, H, K (found {}, {}, {})",
                n,
                self.h.len(),
                self.k.len()
            )));
        }
        let expect = |what: &str, i: usize, f: &FunctionalRef, numbers: usize| {
            let want = Rank::new(self.functions, numbers);
            if f.rank() == want {
                Ok(())
            } else {
                Err(SchemeError::IllFormed(format!("{what}{} has rank {}, expected {want}", i + 1, f.rank())))
            }
        };
        for i in 0..n {
            expect("G", i, &self.g[i], self.params)?;
            expect("H", i, &self.h[i], 1 + n + self.params)?;
            expect("K", i, &self.k[i], 1 + self.params + i)?;
        }
        Ok(())
    }

    /// The system for `F_2, ..., F_n` with `F_1` replaced by a code `w`
    /// passed as an extra trailing parameter.
    fn fold_first(&self) -> MlrnSystem {
        let n = self.len();
        let m = self.params;
        let rank = |numbers| Rank::new(self.functions, numbers);
        let mut g = Vec::new();
        let mut h = Vec::new();
        let mut k = Vec::new();
        for i in 1..n {
            let gi = Rc::clone(&self.g[i]);
            g.push(HostFn::new(rank(m + 1), move |fs, a, ctx| gi.apply(fs, &a[..m], ctx)).into_ref());

            let hi = Rc::clone(&self.h[i]);
            h.push(
                HostFn::new(rank(1 + (n - 1) + m + 1), move |fs, a, ctx| {
                    let u = &a[0];
                    let w = &a[a.len() - 1];
                    let mut args = Vec::with_capacity(1 + n + m);
                    args.push(u.clone());
                    args.push(seq_get(w, &monus(&Nat::from(len(u)), &Nat::from(1u32))));
                    args.extend_from_slice(&a[1..n]);
                    args.extend_from_slice(&a[n..n + m]);
                    hi.apply(fs, &args, ctx)
                })
                .into_ref(),
            );

            let ki = Rc::clone(&self.k[i]);
            let extra = i - 1;
            k.push(
                HostFn::new(rank(1 + m + 1 + extra), move |fs, a, ctx| {
                    let u = &a[0];
                    let w = &a[1 + m];
                    let mut args = Vec::with_capacity(1 + m + 1 + extra);
                    args.extend_from_slice(&a[..1 + m]);
                    args.push(seq_get(w, &Nat::from(len(u))));
                    args.extend_from_slice(&a[2 + m..]);
                    ki.apply(fs, &args, ctx)
                })
                .into_ref(),
            );
        }
        MlrnSystem { functions: self.functions, params: m + 1, g, h, k }
    }
}

fn call(f: &FunctionalRef, oracles: &mut [Oracle], args: &[Nat], ctx: &mut EvalCtx) -> Result<Nat, EvalError> {
    ctx.tick()?;
    f.apply(oracles, args, ctx)
}

fn join(parts: &[&[Nat]]) -> Vec<Nat> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

/// `K̂(u, α)`: the prefix of `u` at which `K_1` is largest (the shortest such).
pub fn k_hat(
    k1: &FunctionalRef,
    oracles: &mut [Oracle],
    u: &Nat,
    alpha: &[Nat],
    ctx: &mut EvalCtx,
) -> Result<Nat, EvalError> {
    Ok(k_hat_bar(k1, oracles, u, alpha, ctx)?.0)
}

/// `K̄(u, α) = K_1(K̂(u, α), α)`.
pub fn k_bar(
    k1: &FunctionalRef,
    oracles: &mut [Oracle],
    u: &Nat,
    alpha: &[Nat],
    ctx: &mut EvalCtx,
) -> Result<Nat, EvalError> {
    Ok(k_hat_bar(k1, oracles, u, alpha, ctx)?.1)
}

fn k_hat_bar(
    k1: &FunctionalRef,
    oracles: &mut [Oracle],
    u: &Nat,
    alpha: &[Nat],
    ctx: &mut EvalCtx,
) -> Result<(Nat, Nat), EvalError> {
    let mut hat = Nat::zero();
    let mut bar = call(k1, oracles, &join(&[&[Nat::zero()], alpha]), ctx)?;
    for p in prefixes(u).skip(1) {
        let kp = call(k1, oracles, &join(&[std::slice::from_ref(&p), alpha]), ctx)?;
        if kp > bar {
            hat = p;
            bar = kp;
        }
    }
    Ok((hat, bar))
}

/// Simultaneous recursion evaluated directly: the reference semantics.
/// Every value is bounded by its `K_i`, clamping or failing per `ctx`.
pub fn direct_mlrn(
    sys: &MlrnSystem,
    oracles: &mut [Oracle],
    u: &Nat,
    alpha: &[Nat],
    ctx: &mut EvalCtx,
) -> Result<Vec<Nat>, EvalError> {
    let n = sys.len();
    let mut prev: Vec<Nat> = Vec::new();
    for p in prefixes(u) {
        ctx.ledger.recursion_steps += 1;
        let mut cur: Vec<Nat> = Vec::with_capacity(n);
        for i in 0..n {
            let raw = if p.is_zero() {
                call(&sys.g[i], oracles, alpha, ctx)?
            } else {
                call(&sys.h[i], oracles, &join(&[std::slice::from_ref(&p), &prev, alpha]), ctx)?
            };
            let k = call(&sys.k[i], oracles, &join(&[std::slice::from_ref(&p), alpha, &cur]), ctx)?;
            cur.push(bound_value(raw, &k, ctx)?);
        }
        prev = cur;
    }
    Ok(prev)
}

/// Evaluates all functionals of `sys` at `u` through the sequence-code
/// construction: `F_1` is read off the code `W`, the rest come from the
/// folded system run with `W` as an extra parameter.
fn eval_compiled(
    sys: &MlrnSystem,
    oracles: &mut [Oracle],
    u: &Nat,
    alpha: &[Nat],
    ctx: &mut EvalCtx,
) -> Result<Vec<Nat>, EvalError> {
    if sys.len() == 1 {
        return direct_mlrn(sys, oracles, u, alpha, ctx);
    }
    let inner = sys.fold_first();
    let w_u = eval_w(sys, &inner, oracles, u, alpha, ctx)?;
    let mut out = vec![seq_get(&w_u, &Nat::from(len(u)))];
    out.extend(eval_compiled(&inner, oracles, u, &join(&[alpha, &[w_u]]), ctx)?);
    Ok(out)
}

/// `W(u, α)` as a numeric code.
fn eval_w(
    sys: &MlrnSystem,
    inner: &MlrnSystem,
    oracles: &mut [Oracle],
    u: &Nat,
    alpha: &[Nat],
    ctx: &mut EvalCtx,
) -> Result<Nat, EvalError> {
    let k1 = &sys.k[0];
    let zero_args = join(&[&[Nat::zero()], alpha]);
    let g1 = call(&sys.g[0], oracles, alpha, ctx)?;
    let k0 = call(k1, oracles, &zero_args, ctx)?;
    let first = bound_value(g1, &k0, ctx)?;
    let mut bar = k0;
    let mut w = SequenceCode::empty(&bar).append(&first).expect("bounded element fits").to_nat();
    let mut half = Nat::zero();
    for p in prefixes(u).skip(1) {
        ctx.ledger.recursion_steps += 1;
        let kp = call(k1, oracles, &join(&[std::slice::from_ref(&p), alpha]), ctx)?;
        if kp > bar {
            bar = kp.clone();
        }
        let last = seq_get(&w, &Nat::from(len(&half)));
        let rest = eval_compiled(inner, oracles, &half, &join(&[alpha, &[w.clone()]]), ctx)?;
        let h1 = call(&sys.h[0], oracles, &join(&[&[p.clone(), last], &rest, alpha]), ctx)?;
        let h1 = bound_value(h1, &kp, ctx)?;
        let width = len(&bar) + 2;
        let code = SequenceCode::from_nat(&w).unwrap_or_else(|_| SequenceCode::with_width(width));
        let appended = code.widen(width).append(&h1).expect("bounded element fits").to_nat();
        w = appended.min(sqbd(&bar, &p));
        half = p;
    }
    Ok(w)
}

/// Evaluator for `F_i` computed through the construction.
struct Compiled {
    sys: Rc<MlrnSystem>,
    index: usize,
}

impl Functional for Compiled {
    fn rank(&self) -> Rank {
        Rank::new(self.sys.functions, 1 + self.sys.params)
    }

    fn apply(&self, oracles: &mut [Oracle], args: &[Nat], ctx: &mut EvalCtx) -> Result<Nat, EvalError> {
        if args.len() != 1 + self.sys.params || oracles.len() < self.sys.functions {
            return Err(EvalError::Arity { expected: self.rank(), found: Rank::new(oracles.len(), args.len()) });
        }
        let mut vals = eval_compiled(&self.sys, oracles, &args[0], &args[1..], ctx)?;
        Ok(vals.swap_remove(self.index))
    }
}

/// One evaluator per functional, each of rank `(k, 1 + params)` taking
/// `(u, α)`.
pub fn compile_mlrn(sys: &MlrnSystem) -> Vec<FunctionalRef> {
    let shared = Rc::new(sys.clone());
    (0..sys.len())
        .map(|index| Rc::new(Compiled { sys: Rc::clone(&shared), index }) as FunctionalRef)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::{nat, pow2};
    use crate::terms::{parse_term, CostLedger, EvalOptions};

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn counting_system() -> MlrnSystem {
        MlrnSystem::from_terms(
            0,
            0,
            vec![t("0"), t("1")],
            vec![t("(comp add (x 1) 1)"), t("(comp mul 2 (x 2))")],
            vec![t("(comp add (x 0) 1)"), t("(comp smash 1 (x 0))")],
        )
        .unwrap()
    }

    fn run(f: &FunctionalRef, u: u64) -> Nat {
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
        f.apply(&mut [], &[nat(u)], &mut ctx).unwrap()
    }

    #[test]
    fn length_and_power() {
        let sys = counting_system();
        let fs = compile_mlrn(&sys);
        for u in 0..1024u64 {
            let l = len(&nat(u));
            assert_eq!(run(&fs[0], u), nat(l), "F1({u})");
            assert_eq!(run(&fs[1], u), pow2(l), "F2({u})");
        }
    }

    #[test]
    fn constant_system() {
        let sys = MlrnSystem::from_terms(
            0,
            0,
            vec![t("0"), t("0")],
            vec![t("(x 1)"), t("(x 2)")],
            vec![t("(x 0)"), t("(x 0)")],
        )
        .unwrap();
        let fs = compile_mlrn(&sys);
        for u in 0..200 {
            assert_eq!(run(&fs[0], u), nat(0));
            assert_eq!(run(&fs[1], u), nat(0));
        }
    }

    #[test]
    fn k_bar_of_thirteen() {
        let k1 = CheckedTerm::new(t("(x 0)"), Rank::new(0, 1)).unwrap().into_ref();
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
        assert_eq!(k_bar(&k1, &mut [], &nat(13), &[], &mut ctx).unwrap(), nat(13));
        assert_eq!(k_hat(&k1, &mut [], &nat(13), &[], &mut ctx).unwrap(), nat(13));
    }

    #[test]
    fn rank_errors() {
        let err = MlrnSystem::from_terms(0, 0, vec![t("0")], vec![t("(x 3)")], vec![t("(x 0)")]);
        assert!(matches!(err, Err(SchemeError::Eval(EvalError::Invalid(_)))));
        let err = MlrnSystem::from_terms(0, 0, vec![t("0")], vec![], vec![]);
        assert!(matches!(err, Err(SchemeError::IllFormed(_))));
    }

    #[test]
    fn strict_mode_reports_overshoot() {
        let sys = MlrnSystem::from_terms(
            0,
            0,
            vec![t("0"), t("0")],
            vec![t("(comp add (x 1) 2)"), t("(x 2)")],
            vec![t("(x 0)"), t("(x 1)")],
        )
        .unwrap();
        let fs = compile_mlrn(&sys);
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::strict());
        assert!(matches!(fs[0].apply(&mut [], &[nat(1)], &mut ctx), Err(EvalError::BoundViolation { .. })));
    }

    #[test]
    fn three_functionals_match_direct() {
        // F1 = |u|, F2 = 2^|u|, F3 = F3' + F1' + F2'
        let sys = MlrnSystem::from_terms(
            1,
            1,
            vec![t("(x 0)"), t("1"), t("(ap 0 (x 0))")],
            vec![
                t("(comp add (x 1) 1)"),
                t("(comp mul 2 (x 2))"),
                t("(comp add (x 3) (comp add (x 1) (x 2)))"),
            ],
            vec![
                t("(comp add (x 0) (comp add (x 1) 1))"),
                t("(comp smash 2 (x 0))"),
                t("(comp smash (comp add (x 0) (x 1)) (comp add (x 3) 5))"),
            ],
        )
        .unwrap();
        let fs = compile_mlrn(&sys);
        let mut oracles = vec![Oracle::from_pairs([(0, 3), (2, 9)], 1)];
        for x in [0u64, 2, 5] {
            for u in 0..300u64 {
                let mut ledger = CostLedger::default();
                let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
                let want = direct_mlrn(&sys, &mut oracles, &nat(u), &[nat(x)], &mut ctx).unwrap();
                for (i, f) in fs.iter().enumerate() {
                    let got = f.apply(&mut oracles, &[nat(u), nat(x)], &mut ctx).unwrap();
                    assert_eq!(got, want[i], "F{} at u={u}, x={x}", i + 1);
                }
            }
        }
    }
}
