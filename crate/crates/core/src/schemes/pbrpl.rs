//! Bounded recursion of polynomial length, and its evaluation under an
//! adaptive clock.

use std::collections::{BTreeMap, BTreeSet};

use super::SchemeError;
use crate::nat::{len, Nat};
use crate::sop::{sop_eval, NormMethod, Sop, SopEnv, DEFAULT_NORM_CAP};
use crate::terms::{
    CheckedTerm, CostLedger, EvalCtx, EvalError, EvalOptions, FunctionalRef, Oracle, Rank, Term,
};

/// `F*(f, x, 0) = G(f, x)`, `F*(f, x, u+1) = H(f, x, F*(f, x, u), u)`,
/// with length `P(|f|, |x|)` and value bound `Q(|f|, |x|)`.
#[derive(Clone)]
pub struct PbrplSystem {
    pub functions: usize,
    pub params: usize,
    pub g: FunctionalRef,
    pub h: FunctionalRef,
    pub p: Sop,
    pub q: Sop,
}

impl std::fmt::Debug for PbrplSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PbrplSystem(rank=({},{}), p={}, q={})", self.functions, self.params, self.p, self.q)
    }
}

impl PbrplSystem {
    pub fn from_terms(
        functions: usize,
        params: usize,
        g: Term,
        h: Term,
        p: Sop,
        q: Sop,
    ) -> Result<PbrplSystem, SchemeError> {
        let check = |t: Term, numbers| {
            CheckedTerm::new(t, Rank::new(functions, numbers))
                .map(CheckedTerm::into_ref)
                .map_err(|e| SchemeError::Eval(EvalError::Invalid(e)))
        };
        let g = check(g, params)?;
        let h = check(h, params + 2)?;
        for (name, s) in [("P", &p), ("Q", &q)] {
            if s.num_vars() > params || s.num_functions() > functions {
                return Err(SchemeError::IllFormed(format!("{name} = {s} uses variables outside the rank")));
            }
        }
        Ok(PbrplSystem { functions, params, g, h, p, q })
    }

    fn check_args(&self, oracles: &[Oracle], xs: &[Nat]) -> Result<(), SchemeError> {
        if xs.len() != self.params || oracles.len() < self.functions {
            return Err(EvalError::Arity {
                expected: Rank::new(self.functions, self.params),
                found: Rank::new(oracles.len(), xs.len()),
            }
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockConfig {
    /// Largest recursion index before the run is declared non-terminating.
    pub hard_cap: u64,
    pub method: NormMethod,
    pub norm_cap: u64,
    /// Extends a validation domain with every restriction `f*_u`,
    /// `u <= P`, of its oracles.
    pub close_under_restrictions: bool,
    /// Budget for validation, in recursion steps.
    pub search_cap: u128,
    pub eval: EvalOptions,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            hard_cap: 1 << 16,
            method: NormMethod::Table,
            norm_cap: DEFAULT_NORM_CAP,
            close_under_restrictions: true,
            search_cap: 10_000_000,
            eval: EvalOptions::default(),
        }
    }
}

fn poly(s: &Sop, oracles: &[Oracle], xs: &[Nat], cfg: &ClockConfig) -> Result<u64, SchemeError> {
    let env = SopEnv::for_args(xs, oracles).with_method(cfg.method).with_cap(cfg.norm_cap);
    Ok(sop_eval(s, &env)?)
}

fn step(
    sys: &PbrplSystem,
    oracles: &mut [Oracle],
    xs: &[Nat],
    prev: Option<(Nat, u64)>,
    ctx: &mut EvalCtx,
) -> Result<Nat, EvalError> {
    ctx.tick()?;
    ctx.ledger.recursion_steps += 1;
    match prev {
        None => sys.g.apply(oracles, xs, ctx),
        Some((v, u)) => {
            let mut args = xs.to_vec();
            args.push(v);
            args.push(Nat::from(u));
            sys.h.apply(oracles, &args, ctx)
        }
    }
}

/// `F*(f, x, u)` for `u = 0..=upto`.
pub fn iterate_pbrpl(
    sys: &PbrplSystem,
    oracles: &mut [Oracle],
    xs: &[Nat],
    upto: u64,
    ctx: &mut EvalCtx,
) -> Result<Vec<Nat>, SchemeError> {
    Ok(trace(sys, oracles, xs, upto, ctx)?.0)
}

type Trace = (Vec<Nat>, Vec<Vec<BTreeSet<Nat>>>);

/// Values `F*(0..=upto)` and, per `u`, the points queried while computing
/// `F*(z)` for `z <= u`.
fn trace(
    sys: &PbrplSystem,
    oracles: &mut [Oracle],
    xs: &[Nat],
    upto: u64,
    ctx: &mut EvalCtx,
) -> Result<Trace, SchemeError> {
    sys.check_args(oracles, xs)?;
    let starts: Vec<usize> = oracles.iter().map(|o| o.log().len()).collect();
    let mut values = Vec::new();
    let mut seen = Vec::new();
    for u in 0..=upto {
        let prev = values.last().cloned().map(|v| (v, u - 1));
        values.push(step(sys, oracles, xs, prev, ctx)?);
        seen.push(queried_since(oracles, &starts));
    }
    Ok((values, seen))
}

fn queried_since(oracles: &[Oracle], starts: &[usize]) -> Vec<BTreeSet<Nat>> {
    oracles.iter().zip(starts).map(|(o, &s)| o.log()[s..].iter().cloned().collect()).collect()
}

fn restrict(oracles: &[Oracle], points: &[BTreeSet<Nat>]) -> Vec<Oracle> {
    oracles.iter().zip(points).map(|(o, ps)| o.restrict(ps, Nat::default())).collect()
}

/// `F(f, x) = F*(f, x, P(|f|, |x|))` with `P` evaluated on the real oracles.
pub fn eval_pbrpl_unclocked(
    sys: &PbrplSystem,
    oracles: &mut [Oracle],
    xs: &[Nat],
    ctx: &mut EvalCtx,
    cfg: &ClockConfig,
) -> Result<Nat, SchemeError> {
    sys.check_args(oracles, xs)?;
    let p = poly(&sys.p, &oracles[..sys.functions], xs, cfg)?;
    if p > cfg.hard_cap {
        return Err(SchemeError::NonTermination { cap: cfg.hard_cap });
    }
    let mut values = iterate_pbrpl(sys, oracles, xs, p, ctx)?;
    Ok(values.pop().expect("at least F*(0)"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClockedRun {
    pub value: Nat,
    /// The `u` at which `u + 1 > P*` first held.
    pub abort_u: u64,
    /// `P*(u)` for each `u <= abort_u`.
    pub p_star: Vec<u64>,
    /// Points of each oracle used up to the abort.
    pub queried: Vec<BTreeSet<Nat>>,
}

/// `F̂(f, x)`: iterates `F*` while `u + 1 <= P*(u) = P(|f*_u|, |x|)`, where
/// `f*_u` agrees with `f` on the points queried so far and is 0 elsewhere.
/// Every value is checked against `Q(|f*_u|, |x|)`.
pub fn eval_pbrpl_clocked(
    sys: &PbrplSystem,
    oracles: &mut [Oracle],
    xs: &[Nat],
    ctx: &mut EvalCtx,
    cfg: &ClockConfig,
) -> Result<ClockedRun, SchemeError> {
    sys.check_args(oracles, xs)?;
    let oracles = &mut oracles[..sys.functions];
    let starts: Vec<usize> = oracles.iter().map(|o| o.log().len()).collect();
    let mut value = step(sys, oracles, xs, None, ctx)?;
    let mut p_star = Vec::new();
    let mut u = 0u64;
    loop {
        let seen = queried_since(oracles, &starts);
        let approx = restrict(oracles, &seen);
        let p = poly(&sys.p, &approx, xs, cfg)?;
        let q = poly(&sys.q, &approx, xs, cfg)?;
        p_star.push(p);
        if len(&value) > q {
            return Err(SchemeError::BoundViolation { step: Nat::from(u), value_bits: len(&value), bound: q });
        }
        if u + 1 > p {
            return Ok(ClockedRun { value, abort_u: u, p_star, queried: seen });
        }
        if u >= cfg.hard_cap {
            return Err(SchemeError::NonTermination { cap: cfg.hard_cap });
        }
        value = step(sys, oracles, xs, Some((value, u)), ctx)?;
        u += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// `|F*(y)| <= Q` for `y <= P`.
    QBound,
    /// `F*(y) = F*(P)` for `y >= P`.
    Stabilization,
    /// Agreement up to `P` forces agreement everywhere.
    Locality,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::QBound => "q-bound",
            Condition::Stabilization => "stabilization",
            Condition::Locality => "locality",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    /// Index into [`PbrplReport::instances`].
    pub instance: usize,
    /// The second instance of a locality violation.
    pub other: Option<usize>,
    pub y: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PbrplReport {
    /// Checked instances; the given domain first, then its restrictions.
    pub instances: Vec<(Vec<Oracle>, Vec<Nat>)>,
    /// Largest `y` up to which the universal conditions were checked.
    pub horizon: u64,
    pub pairs_checked: u64,
    pub violations: Vec<Violation>,
}

impl PbrplReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, c: Condition) -> usize {
        self.violations.iter().filter(|v| v.condition == c).count()
    }
}

struct Instance {
    oracles: Vec<Oracle>,
    xs: Vec<Nat>,
    p: u64,
    q: u64,
}

fn key(oracles: &[Oracle], xs: &[Nat]) -> String {
    let mut s: String = oracles.iter().map(|o| format!("{o}|")).collect();
    for x in xs {
        s.push_str(&format!("{x},"));
    }
    s
}

/// Checks the value bound, stabilization up to horizon `2P + 4` and
/// locality over pairs with equal number arguments, by brute force over
/// `domain`.
pub fn validate_pbrpl(
    sys: &PbrplSystem,
    domain: &[(Vec<Oracle>, Vec<Nat>)],
    cfg: &ClockConfig,
) -> Result<PbrplReport, SchemeError> {
    let mut ledger = CostLedger::default();
    let mut instances: Vec<Instance> = Vec::new();
    let mut keys = BTreeSet::new();
    let mut pending: Vec<(Vec<Oracle>, Vec<Nat>)> = Vec::new();
    let mut budget: u128 = 0;
    let mut admit = |oracles: Vec<Oracle>, xs: Vec<Nat>, instances: &mut Vec<Instance>| -> Result<bool, SchemeError> {
        sys.check_args(&oracles, &xs)?;
        if !keys.insert(key(&oracles[..sys.functions], &xs)) {
            return Ok(false);
        }
        let p = poly(&sys.p, &oracles[..sys.functions], &xs, cfg)?;
        let q = poly(&sys.q, &oracles[..sys.functions], &xs, cfg)?;
        budget += u128::from(2 * p + 5);
        if budget > cfg.search_cap {
            return Err(SchemeError::SearchSpaceTooLarge { estimate: budget, cap: cfg.search_cap });
        }
        let oracles = oracles.into_iter().take(sys.functions).map(|o| o.restrict(o.table().keys(), o.default_value().clone())).collect();
        instances.push(Instance { oracles, xs, p, q });
        Ok(true)
    };
    for (os, xs) in domain {
        admit(os.clone(), xs.clone(), &mut instances)?;
    }
    if cfg.close_under_restrictions {
        for inst in &instances {
            let mut os = inst.oracles.clone();
            let mut ctx = EvalCtx::new(&mut ledger, cfg.eval);
            let (_, seen) = trace(sys, &mut os, &inst.xs, inst.p, &mut ctx)?;
            for points in seen {
                pending.push((restrict(&inst.oracles, &points), inst.xs.clone()));
            }
        }
        for (os, xs) in pending {
            admit(os, xs, &mut instances)?;
        }
    }

    let mut groups: BTreeMap<Vec<Nat>, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        groups.entry(inst.xs.clone()).or_default().push(i);
    }
    let mut report = PbrplReport::default();
    let mut estimate: u128 = 0;
    for members in groups.values() {
        let horizon = members.iter().map(|&i| 2 * instances[i].p + 4).max().unwrap_or(0);
        let n = members.len() as u128;
        estimate += (n * n + n) * u128::from(horizon + 1);
    }
    if estimate > cfg.search_cap {
        return Err(SchemeError::SearchSpaceTooLarge { estimate, cap: cfg.search_cap });
    }
    for members in groups.values() {
        let horizon = members.iter().map(|&i| 2 * instances[i].p + 4).max().unwrap_or(0);
        report.horizon = report.horizon.max(horizon);
        let mut values = Vec::with_capacity(members.len());
        for &i in members {
            let inst = &instances[i];
            let mut os = inst.oracles.clone();
            let mut ctx = EvalCtx::new(&mut ledger, cfg.eval);
            let vs = iterate_pbrpl(sys, &mut os, &inst.xs, horizon, &mut ctx)?;
            let p = inst.p as usize;
            if let Some(y) = (0..=p).find(|&y| len(&vs[y]) > inst.q) {
                report.violations.push(Violation { condition: Condition::QBound, instance: i, other: None, y: y as u64 });
            }
            if let Some(y) = (p..vs.len()).find(|&y| vs[y] != vs[p]) {
                report.violations.push(Violation {
                    condition: Condition::Stabilization,
                    instance: i,
                    other: None,
                    y: y as u64,
                });
            }
            values.push(vs);
        }
        for (a, &i) in members.iter().enumerate() {
            for (b, &j) in members.iter().enumerate() {
                if a == b {
                    continue;
                }
                report.pairs_checked += 1;
                let p = instances[i].p as usize;
                if values[a][..=p] != values[b][..=p] {
                    continue;
                }
                if let Some(y) = (p + 1..values[a].len()).find(|&y| values[a][y] != values[b][y]) {
                    report.violations.push(Violation {
                        condition: Condition::Locality,
                        instance: i,
                        other: Some(j),
                        y: y as u64,
                    });
                }
            }
        }
    }
    report.violations.sort_by_key(|v| (v.condition, v.instance, v.other, v.y));
    report.instances = instances.into_iter().map(|i| (i.oracles, i.xs)).collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::nat;
    use crate::sop::parse_sop;
    use crate::terms::parse_term;

    fn fixpoint(p: &str) -> PbrplSystem {
        PbrplSystem::from_terms(
            1,
            1,
            parse_term("(x 0)").unwrap(),
            parse_term("(ap 0 (x 1))").unwrap(),
            parse_sop(p).unwrap(),
            parse_sop("(c 3)").unwrap(),
        )
        .unwrap()
    }

    fn table() -> Oracle {
        Oracle::from_pairs([(5, 3), (3, 1), (1, 1)], 0)
    }

    fn clocked(sys: &PbrplSystem, f: Oracle, x: u64) -> Result<ClockedRun, SchemeError> {
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
        eval_pbrpl_clocked(sys, &mut [f], &[nat(x)], &mut ctx, &ClockConfig::default())
    }

    fn unclocked(sys: &PbrplSystem, f: Oracle, x: u64) -> Nat {
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
        eval_pbrpl_unclocked(sys, &mut [f], &[nat(x)], &mut ctx, &ClockConfig::default()).unwrap()
    }

    #[test]
    fn depth_zero_clock_runs_p_steps() {
        let sys = fixpoint("(+ (lx 0) (c 1))");
        let run = clocked(&sys, table(), 5).unwrap();
        assert_eq!(run.value, nat(1));
        assert_eq!(run.abort_u, 4);
        assert_eq!(run.p_star, vec![4; 5]);
        assert_eq!(unclocked(&sys, table(), 5), nat(1));
    }

    #[test]
    fn norm_clock_grows_with_queries() {
        let sys = fixpoint("(+ (nf 0 (lx 0)) (c 1))");
        let run = clocked(&sys, table(), 5).unwrap();
        assert_eq!(run.p_star[0], 1);
        assert_eq!(run.p_star, vec![1, 3, 3, 3]);
        assert_eq!(run.value, nat(1));
        assert_eq!(run.value, unclocked(&sys, table(), 5));
        assert_eq!(run.queried[0], [nat(5), nat(3), nat(1)].into_iter().collect());
    }

    #[test]
    fn zero_length_recursion() {
        let sys = fixpoint("(nf 0 (lx 0))");
        let run = clocked(&sys, Oracle::constant(nat(0)), 6).unwrap();
        assert_eq!((run.value, run.abort_u), (nat(6), 0));
    }

    #[test]
    fn q_violation_is_an_error() {
        let sys = fixpoint("(c 2)");
        assert!(matches!(clocked(&sys, table(), 9), Err(SchemeError::BoundViolation { .. })));
    }

    #[test]
    fn hard_cap() {
        let sys = PbrplSystem::from_terms(
            0,
            0,
            parse_term("0").unwrap(),
            parse_term("(x 0)").unwrap(),
            Sop::c(1000),
            Sop::c(1),
        )
        .unwrap();
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
        let cfg = ClockConfig { hard_cap: 10, ..ClockConfig::default() };
        let err = eval_pbrpl_clocked(&sys, &mut [], &[], &mut ctx, &cfg).unwrap_err();
        assert_eq!(err, SchemeError::NonTermination { cap: 10 });
    }

    fn fixpoint_domain() -> Vec<(Vec<Oracle>, Vec<Nat>)> {
        // f(0) = 0 and every other point reaches 0 or a fixpoint within two steps
        let tables: [&[(u64, u64)]; 4] = [
            &[(5, 3), (3, 1), (1, 1)],
            &[(1, 2), (2, 2), (7, 2), (4, 4)],
            &[(6, 6), (5, 6), (3, 5)],
            &[],
        ];
        let mut out = Vec::new();
        for t in tables {
            for x in 0..8 {
                out.push((vec![Oracle::from_pairs(t.iter().copied(), 0)], vec![nat(x)]));
            }
        }
        out
    }

    #[test]
    fn fixpoint_system_validates() {
        let sys = fixpoint("(+ (lx 0) (c 1))");
        let report = validate_pbrpl(&sys, &fixpoint_domain(), &ClockConfig::default()).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.instances.len() > 32);
        assert_eq!(report.horizon, 12);
    }

    #[test]
    fn counter_fails_stabilization() {
        let sys = PbrplSystem::from_terms(
            1,
            1,
            parse_term("0").unwrap(),
            parse_term("(comp add (x 1) 1)").unwrap(),
            parse_sop("(+ (lx 0) (c 1))").unwrap(),
            parse_sop("(c 8)").unwrap(),
        )
        .unwrap();
        let report = validate_pbrpl(&sys, &fixpoint_domain(), &ClockConfig::default()).unwrap();
        assert!(report.count(Condition::Stabilization) > 0);
        assert_eq!(report.count(Condition::QBound), 0);
    }

    #[test]
    fn empty_domain_passes() {
        let sys = fixpoint("(lx 0)");
        let report = validate_pbrpl(&sys, &[], &ClockConfig::default()).unwrap();
        assert!(report.passed());
        assert!(report.instances.is_empty());
    }

    #[test]
    fn locality_violation_detected() {
        // F*(y) = f(y) ignores everything before; agreement up to P = 1 says nothing after
        let sys = PbrplSystem::from_terms(
            1,
            1,
            parse_term("0").unwrap(),
            parse_term("(ap 0 (x 2))").unwrap(),
            parse_sop("(c 1)").unwrap(),
            parse_sop("(c 3)").unwrap(),
        )
        .unwrap();
        let domain = vec![
            (vec![Oracle::from_pairs([(0, 1)], 0)], vec![nat(0)]),
            (vec![Oracle::from_pairs([(0, 1), (1, 5)], 0)], vec![nat(0)]),
        ];
        let cfg = ClockConfig { close_under_restrictions: false, ..ClockConfig::default() };
        let report = validate_pbrpl(&sys, &domain, &cfg).unwrap();
        assert!(report.count(Condition::Locality) > 0);
    }
}
