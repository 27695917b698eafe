//! Witness terms: a bounded-existential characterization of `|u| <= P`.
//!
//! Every subpolynomial value `V` is represented by a term `w` with `|w| = V`:
//!
//! * `|x_i|` by `x_i`, and a constant `n` by the literal `2^(n-1)` (or 0);
//! * `P + Q` by `half((1 # w_P) · (1 # w_Q))`, since `1 # w = 2^|w|`;
//! * `P · Q` by `half(w_P # w_Q)`;
//! * `|f_j|(R)` by `f_j(z)` for a witness `z <= (1 # w_R) ∸ 1 = 2^R - 1`.
//!
//! Choosing every witness as a maximizer of `|f_j|` over its range makes each
//! representation exact, and no choice can exceed the polynomial, so
//! `|u| <= P` holds iff some choice of witnesses gives `u <= (1 # w_P) ∸ 1`.

use super::{is_regular, norm_apps_by_depth, sop_eval, NormMethod, Sop, SopEnv, SopError, DEFAULT_NORM_CAP};
use crate::nat::{len, pow2, to_u64_sat, Nat};
use crate::terms::{Builtin, CheckedTerm, CostLedger, EvalCtx, EvalOptions, Functional, Oracle, Rank, Term};
use std::collections::{BTreeSet, HashMap};
use std::ops::RangeInclusive;

/// The terms `t_0, ..., t_W` for a regular polynomial with `W` distinct
/// applications of function variables. `terms[i]` takes the number
/// arguments followed by the witnesses `z_1, ..., z_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessTerms {
    pub numbers: usize,
    /// `(j, depth)` of the application each witness stands for, in quantifier
    /// order.
    pub witnesses: Vec<(usize, usize)>,
    pub terms: Vec<Term>,
}

fn two_to_len(w: Term) -> Term {
    Term::comp(Term::Smash, vec![Term::lit(1), w])
}

fn ones_of_len(w: Term) -> Term {
    Term::call(Builtin::Monus, vec![two_to_len(w), Term::lit(1)])
}

fn half(t: Term) -> Term {
    Term::call(Builtin::Half, vec![t])
}

/// Builds the witness terms of `p`, whose number arguments are
/// `x_0 .. x_{n-1}` with `n = p.num_vars()`.
pub fn witness_terms(p: &Sop) -> Result<WitnessTerms, SopError> {
    if !is_regular(p) {
        return Err(SopError::NotRegular);
    }
    let numbers = p.num_vars();
    let mut apps: Vec<((usize, usize), &Sop)> = norm_apps_by_depth(p)
        .into_iter()
        .map(|(key, group)| (key, group[0]))
        .collect();
    apps.sort_by_key(|((j, d), _)| (*d, *j));
    let index: HashMap<&Sop, usize> = apps.iter().enumerate().map(|(i, (_, q))| (*q, i)).collect();

    let mut terms = Vec::with_capacity(apps.len() + 1);
    for (_, q) in &apps {
        let Sop::NormApp(_, arg) = q else { unreachable!() };
        terms.push(ones_of_len(representative(arg, numbers, &index)));
    }
    terms.push(ones_of_len(representative(p, numbers, &index)));
    Ok(WitnessTerms { numbers, witnesses: apps.iter().map(|(k, _)| (k.0, k.1)).collect(), terms })
}

fn representative(p: &Sop, numbers: usize, index: &HashMap<&Sop, usize>) -> Term {
    match p {
        Sop::Const(0) => Term::lit(0),
        Sop::Const(n) => Term::Lit(pow2(n - 1)),
        Sop::LenVar(i) => Term::Var(*i),
        Sop::Plus(a, b) => half(Term::call(
            Builtin::Mul,
            vec![two_to_len(representative(a, numbers, index)), two_to_len(representative(b, numbers, index))],
        )),
        Sop::Times(a, b) => half(Term::comp(
            Term::Smash,
            vec![representative(a, numbers, index), representative(b, numbers, index)],
        )),
        Sop::NormApp(j, _) => Term::ap(*j, Term::Var(numbers + index[p])),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WitnessConfig {
    pub method: NormMethod,
    pub norm_cap: u64,
    /// Maximum number of witness tuples (or candidates per witness) visited.
    pub search_cap: u128,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig { method: NormMethod::BruteForce, norm_cap: DEFAULT_NORM_CAP, search_cap: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub u: u64,
    /// `|u| <= P`
    pub lhs: bool,
    /// some witness tuple gives `u <= t_W`
    pub rhs: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    pub poly_value: u64,
    /// Largest value of the last term over all witness tuples.
    pub rhs_max: Nat,
    pub tuples: u64,
    pub checked: u64,
    pub disagreements: Vec<Disagreement>,
}

/// Evaluates both sides of the witness biconditional for every `u` in `us`.
///
/// The left side uses [`sop_eval`]. The right side enumerates all witness
/// tuples within the term bounds. A witness that only ever occurs as the
/// direct argument of oracle applications is enumerated up to equivalence:
/// every table key in range, plus the least in-range point that is no key.
pub fn witness_check(
    p: &Sop,
    terms: &[Term],
    oracles: &[Oracle],
    xs: &[Nat],
    us: RangeInclusive<u64>,
    cfg: &WitnessConfig,
) -> Result<WitnessReport, SopError> {
    let env = SopEnv::for_args(xs, oracles).with_method(cfg.method).with_cap(cfg.norm_cap);
    let poly_value = sop_eval(p, &env)?;

    let levels = terms.len().saturating_sub(1);
    let checked = terms
        .iter()
        .enumerate()
        .map(|(i, t)| CheckedTerm::new(t.clone(), Rank::new(oracles.len(), xs.len() + i)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| SopError::Eval(crate::terms::EvalError::Invalid(e)))?;
    let ap_targets: Vec<Option<BTreeSet<usize>>> =
        (0..levels).map(|m| ap_only_targets(&terms[m + 1..], xs.len() + m)).collect();

    let mut search = Search {
        terms: &checked,
        ap_targets: &ap_targets,
        oracles: oracles.to_vec(),
        args: xs.to_vec(),
        best: None,
        tuples: 0,
        cap: cfg.search_cap,
    };
    search.run(0)?;
    let rhs_max = search.best.unwrap_or_default();

    let mut report =
        WitnessReport { poly_value, rhs_max, tuples: search.tuples, checked: 0, disagreements: Vec::new() };
    for u in us {
        let lhs = len(&Nat::from(u)) <= poly_value;
        let rhs = Nat::from(u) <= report.rhs_max;
        report.checked += 1;
        if lhs != rhs {
            report.disagreements.push(Disagreement { u, lhs, rhs });
        }
    }
    Ok(report)
}

struct Search<'a> {
    terms: &'a [CheckedTerm],
    ap_targets: &'a [Option<BTreeSet<usize>>],
    oracles: Vec<Oracle>,
    args: Vec<Nat>,
    best: Option<Nat>,
    tuples: u64,
    cap: u128,
}

impl Search<'_> {
    fn eval(&mut self, level: usize) -> Result<Nat, SopError> {
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
        let v = self.terms[level].apply(&mut self.oracles, &self.args, &mut ctx)?;
        self.oracles.iter_mut().for_each(Oracle::clear_log);
        Ok(v)
    }

    fn run(&mut self, level: usize) -> Result<(), SopError> {
        let v = self.eval(level)?;
        if level + 1 == self.terms.len() {
            self.tuples += 1;
            if self.tuples as u128 > self.cap {
                return Err(SopError::SearchSpaceTooLarge { estimate: self.tuples as u128, cap: self.cap });
            }
            if self.best.as_ref().is_none_or(|b| v > *b) {
                self.best = Some(v);
            }
            return Ok(());
        }
        for z in self.candidates(level, &v)? {
            self.args.push(z);
            self.run(level + 1)?;
            self.args.pop();
        }
        Ok(())
    }

    fn candidates(&self, level: usize, bound: &Nat) -> Result<Vec<Nat>, SopError> {
        match &self.ap_targets[level] {
            Some(js) => {
                let keys: BTreeSet<&Nat> = js
                    .iter()
                    .filter_map(|j| self.oracles.get(*j))
                    .flat_map(|f| f.table().keys())
                    .filter(|k| *k <= bound)
                    .collect();
                let mut out: Vec<Nat> = keys.iter().map(|k| (*k).clone()).collect();
                let mut fresh = Nat::default();
                while keys.contains(&fresh) {
                    fresh += 1u32;
                }
                if fresh <= *bound {
                    out.push(fresh);
                }
                Ok(out)
            }
            None => {
                let n = to_u64_sat(bound) as u128 + 1;
                if n > self.cap {
                    return Err(SopError::SearchSpaceTooLarge { estimate: n, cap: self.cap });
                }
                Ok((0..n as u64).map(Nat::from).collect())
            }
        }
    }
}

/// If argument `var` only occurs as `f_j(x_var)` in `terms`, the set of such
/// `j`; `None` if it may be used any other way.
fn ap_only_targets(terms: &[Term], var: usize) -> Option<BTreeSet<usize>> {
    let mut js = BTreeSet::new();
    for t in terms {
        collect_ap_targets(t, var, &mut js)?;
    }
    Some(js)
}

fn collect_ap_targets(t: &Term, var: usize, js: &mut BTreeSet<usize>) -> Option<()> {
    match t {
        Term::Var(v) if *v == var => None,
        Term::Var(_) | Term::Lit(_) => Some(()),
        Term::Comp { head, args } => {
            if let (Term::ApOracle(j), [Term::Var(v)]) = (head.as_ref(), args.as_slice()) {
                if *v == var {
                    js.insert(*j);
                    return Some(());
                }
            }
            // the head only sees the values of `args`
            args.iter().try_for_each(|a| collect_ap_targets(a, var, js))
        }
        // anything else reads the context positionally
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::nat;

    fn check(p: &Sop, wt: &WitnessTerms, f: &[Oracle], xs: &[u64], us: RangeInclusive<u64>) -> WitnessReport {
        let xs: Vec<Nat> = xs.iter().map(|&x| nat(x)).collect();
        witness_check(p, &wt.terms, f, &xs, us, &WitnessConfig::default()).unwrap()
    }

    #[test]
    fn length_of_single_variable() {
        let p = Sop::lx(0);
        let wt = witness_terms(&p).unwrap();
        assert_eq!(wt.terms.len(), 1);
        assert_eq!(wt.terms[0].to_string(), "(comp monus (comp smash 1 (x 0)) 1)");
        for x in 0..=255 {
            let r = check(&p, &wt, &[], &[x], 0..=255);
            assert!(r.disagreements.is_empty(), "x = {x}");
        }
        assert!(check(&p, &wt, &[], &[5], 0..=31).disagreements.is_empty());
    }

    #[test]
    fn zero_polynomial() {
        let p = Sop::c(0);
        let wt = witness_terms(&p).unwrap();
        let r = check(&p, &wt, &[], &[], 0..=3);
        assert!(r.disagreements.is_empty());
        assert_eq!(r.rhs_max, nat(0));
    }

    #[test]
    fn one_norm_application() {
        let p = Sop::nf(0, Sop::lx(0));
        let wt = witness_terms(&p).unwrap();
        assert_eq!(wt.terms.len(), 2);
        assert_eq!(wt.terms[0].to_string(), "(comp monus (comp smash 1 (x 0)) 1)");
        assert_eq!(wt.terms[1].to_string(), "(comp monus (comp smash 1 (ap 0 (x 1))) 1)");
        let f = [Oracle::from_pairs([(0, 3), (1, 7), (5, 2)], 0)];
        for x in [0, 1, 2, 5, 9] {
            assert!(check(&p, &wt, &f, &[x], 0..=255).disagreements.is_empty());
        }
    }

    #[test]
    fn broken_last_term_is_caught() {
        let p = Sop::nf(0, Sop::lx(0));
        let mut wt = witness_terms(&p).unwrap();
        wt.terms[1] = Term::lit(0);
        let f = [Oracle::from_pairs([(0, 1)], 0)];
        let r = check(&p, &wt, &f, &[0], 0..=3);
        assert_eq!(r.disagreements[0], Disagreement { u: 1, lhs: true, rhs: false });
    }

    #[test]
    fn rejects_irregular() {
        let p = Sop::nf(0, Sop::lx(0)) + Sop::nf(0, Sop::lx(1));
        assert_eq!(witness_terms(&p), Err(SopError::NotRegular));
    }

    #[test]
    fn positional_witness_uses_full_range() {
        // t_1 reads z_1 outside of an oracle application: plain enumeration.
        let terms = vec![Term::lit(1000), Term::Var(0)];
        let xs = [nat(0)];
        let cfg = WitnessConfig { search_cap: 10, ..Default::default() };
        let err = witness_check(&Sop::c(0), &terms, &[], &xs[..0], 0..=0, &cfg).unwrap_err();
        assert!(matches!(err, SopError::SearchSpaceTooLarge { .. }));
    }
}
