//! Majorizing second-order polynomials for terms, and sampling checks
//! that a polynomial really bounds a term.

use crate::nat::{len, Nat};
use crate::sop::{sop_eval, NormMethod, Sop, SopEnv, SopError, DEFAULT_NORM_CAP};
use crate::terms::{eval, Builtin, CostLedger, EvalError, EvalOptions, Oracle, Term};

/// A polynomial `B` with `|t(f, x)| <= B(|f|, |x|)` for every input, over
/// the term's least number arity.
pub fn infer_bound(t: &Term) -> Sop {
    let args: Vec<Sop> = (0..t.rank().numbers).map(Sop::lx).collect();
    infer_bound_with(t, &args)
}

/// The bound of `t` with its number arguments bounded in length by `args`.
pub fn infer_bound_with(t: &Term, args: &[Sop]) -> Sop {
    let a = |i: usize| args.get(i).cloned().unwrap_or(Sop::c(0));
    match t {
        Term::Zero => Sop::c(0),
        Term::SuccZero | Term::SuccOne => a(0) + Sop::c(1),
        Term::Proj { index, .. } => a(index - 1),
        Term::Smash => a(0) * a(1) + Sop::c(1),
        Term::ApOracle(j) => Sop::nf(*j, a(0)),
        Term::Var(i) => a(*i),
        Term::Lit(n) => Sop::c(len(n)),
        Term::Builtin(b) => match b {
            Builtin::Add => a(0) + a(1) + Sop::c(1),
            Builtin::Mul => a(0) + a(1),
            Builtin::Len | Builtin::Half | Builtin::Msp | Builtin::Monus | Builtin::Min => a(0),
            Builtin::CondLe => a(2) + a(3),
        },
        Term::Comp { head, args: inner } => {
            let bounds: Vec<Sop> = inner.iter().map(|g| infer_bound_with(g, args)).collect();
            infer_bound_with(head, &bounds)
        }
        Term::Expand { numbers, .. } => {
            let Term::Expand { inner, .. } = t else { unreachable!() };
            infer_bound_with(inner, &args[..args.len().saturating_sub(*numbers)])
        }
        Term::Lrn { k, .. } | Term::Lrn1 { k, .. } => infer_bound_with(k, args),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MajorizationConfig {
    pub method: NormMethod,
    pub norm_cap: u64,
    pub eval: EvalOptions,
}

impl Default for MajorizationConfig {
    fn default() -> Self {
        MajorizationConfig { method: NormMethod::BruteForce, norm_cap: DEFAULT_NORM_CAP, eval: EvalOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MajorizationViolation {
    pub sample: usize,
    pub args: Vec<Nat>,
    pub value_bits: u64,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MajorizationReport {
    pub checked: usize,
    /// Samples whose bound could not be evaluated (norm cap, overflow).
    pub skipped: usize,
    /// Samples on which the term itself failed (fuel, value size).
    pub eval_failures: usize,
    pub violations: Vec<MajorizationViolation>,
}

impl MajorizationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates `t` and `b` on every sample and records where `|t| > b`.
pub fn check_majorization(
    t: &Term,
    b: &Sop,
    samples: &[(Vec<Oracle>, Vec<Nat>)],
    cfg: &MajorizationConfig,
) -> Result<MajorizationReport, EvalError> {
    let mut report = MajorizationReport::default();
    for (i, (oracles, xs)) in samples.iter().enumerate() {
        let env = SopEnv::for_args(xs, oracles).with_method(cfg.method).with_cap(cfg.norm_cap);
        let bound = match sop_eval(b, &env) {
            Ok(v) => v,
            Err(SopError::NormCapExceeded { .. } | SopError::Overflow) => {
                report.skipped += 1;
                continue;
            }
            Err(SopError::Eval(e)) => return Err(e),
            Err(e) => panic!("bound does not fit the samples: {e}"),
        };
        let mut os = oracles.clone();
        let mut ledger = CostLedger::default();
        let value = match eval(t, &mut os, xs, &mut ledger, &cfg.eval) {
            Ok(v) => v,
            Err(e @ EvalError::Invalid(_)) => return Err(e),
            Err(_) => {
                report.eval_failures += 1;
                continue;
            }
        };
        report.checked += 1;
        if len(&value) > bound {
            report.violations.push(MajorizationViolation { sample: i, args: xs.clone(), value_bits: len(&value), bound });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::nat;
    use crate::sop::parse_sop;
    use crate::terms::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn rule_table() {
        assert_eq!(infer_bound(&Term::ApOracle(0)), Sop::nf(0, Sop::lx(0)));
        assert_eq!(infer_bound(&Term::Smash), parse_sop("(+ (* (lx 0) (lx 1)) (c 1))").unwrap());
        let k = t("(comp smash (proj 2 1) (proj 2 2))");
        let lrn = Term::lrn1(t("(proj 1 1)"), t("(proj 3 3)"), k);
        assert_eq!(infer_bound(&lrn), parse_sop("(+ (* (lx 0) (lx 1)) (c 1))").unwrap());
        assert_eq!(infer_bound(&Term::Zero), Sop::c(0));
    }

    #[test]
    fn composition_substitutes() {
        let b = infer_bound(&t("(ap 0 (comp s1 (x 0)))"));
        assert_eq!(b, Sop::nf(0, Sop::lx(0) + Sop::c(1)));
        assert_eq!(b.depth(), 1);
        let e = infer_bound(&Term::expand(Term::Smash, 1, 2));
        assert_eq!(e.num_vars(), 2);
    }

    fn samples(n: u64) -> Vec<(Vec<Oracle>, Vec<Nat>)> {
        (0..n)
            .map(|i| {
                let f = Oracle::from_pairs((0..8).map(|k| (k, (k * 37 + i * 11) % 97)), i % 5);
                (vec![f], vec![nat(i % 64), nat((i * 7) % 50)])
            })
            .collect()
    }

    #[test]
    fn ap_is_majorized() {
        let s: Vec<_> = samples(500).into_iter().map(|(f, x)| (f, x[..1].to_vec())).collect();
        let r = check_majorization(&Term::ApOracle(0), &Sop::nf(0, Sop::lx(0)), &s, &Default::default()).unwrap();
        assert!(r.passed());
        assert_eq!(r.checked, 500);
    }

    #[test]
    fn small_bound_is_caught() {
        let s: Vec<_> = samples(20).into_iter().map(|(_, x)| (vec![], x)).collect();
        let r = check_majorization(&Term::Smash, &Sop::c(1), &s, &Default::default()).unwrap();
        assert!(!r.passed());
        let one: Vec<_> = s.iter().map(|(_, x)| (vec![], x[..1].to_vec())).collect();
        let z = check_majorization(&Term::Zero, &Sop::c(0), &one, &Default::default()).unwrap();
        assert!(z.passed());
    }
}
