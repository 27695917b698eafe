//! The acceptance suites: each criterion is checked against an independent
//! brute-force oracle and reports its checks, failures and running time.

pub mod gen;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::bounds::{check_majorization, infer_bound, MajorizationConfig};
use crate::nat::{len, nat, Nat};
use crate::otm::{
    bundled, bundled_bound, check_time_bound, parse_machine, run_observed, Machine, StepEvent, TapeKind,
    TimeBoundConfig,
};
use crate::schemes::{
    compile_mlrn, eval_pbrpl_clocked, eval_pbrpl_unclocked, iterate_pbrpl, kstar, validate_pbrpl, ClockConfig,
    MlrnSystem, PbrplSystem, SchemeError,
};
use crate::sop::{
    is_regular, parse_sop, regularize, sop_eval, witness_check, witness_terms, NormMethod, SopEnv,
    WitnessConfig,
};
use crate::terms::{eval, parse_term, CostLedger, EvalCtx, EvalError, EvalOptions, Oracle, Term};

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub checks: u64,
    pub failures: u64,
    pub summary: String,
    /// The first few failures, for diagnosis.
    pub examples: Vec<String>,
    pub elapsed: Duration,
    pub target: Duration,
}

impl Outcome {
    pub fn within_target(&self) -> bool {
        self.elapsed <= self.target
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0 && self.within_target()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {}: {}: {} failures in {} checks; {} ({:.1} s, target {} s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.failures,
            self.checks,
            self.summary,
            self.elapsed.as_secs_f64(),
            self.target.as_secs()
        )
    }
}

pub const CRITERIA: [(usize, &str, u64); 8] = [
    (1, "witness-term biconditional", 60),
    (2, "K* equivalence", 5),
    (3, "MLRN construction", 60),
    (4, "PBRPL clocked evaluation", 30),
    (5, "majorization of terms", 120),
    (6, "OTM protocol and cost models", 30),
    (7, "OTM time bounds and tape monitors", 60),
    (8, "regularization", 30),
];

struct Tally {
    checks: u64,
    failures: u64,
    examples: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { checks: 0, failures: 0, examples: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.examples.len() < 5 {
                self.examples.push(what());
            }
        }
    }
}

pub fn run_criterion(id: usize, seed: u64) -> Option<Outcome> {
    let &(_, title, target) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut tally = Tally::new();
    let summary = match id {
        1 => witness_biconditional(&mut rng, &mut tally),
        2 => kstar_equivalence(&mut tally),
        3 => mlrn_construction(&mut rng, &mut tally),
        4 => pbrpl_clock(&mut rng, &mut tally),
        5 => majorization(&mut rng, &mut tally),
        6 => otm_protocol(&mut rng, &mut tally),
        7 => otm_time_bounds(&mut rng, &mut tally),
        8 => regularization(&mut rng, &mut tally),
        _ => unreachable!(),
    };
    Some(Outcome {
        id,
        title,
        checks: tally.checks,
        failures: tally.failures,
        summary,
        examples: tally.examples,
        elapsed: start.elapsed(),
        target: Duration::from_secs(target),
    })
}

pub fn run_all(seed: u64) -> Vec<Outcome> {
    CRITERIA.iter().filter_map(|c| run_criterion(c.0, seed)).collect()
}

fn witness_biconditional(rng: &mut StdRng, tally: &mut Tally) -> String {
    let mut polys = BTreeSet::new();
    for depth in 0..=2 {
        for vars in 0..=2 {
            let mut attempts = 0;
            let mut found = 0;
            while found < 3 && attempts < 200 {
                attempts += 1;
                let p = regularize(&gen::sop_of_depth(rng, depth, vars, 1, 4));
                if p.num_vars() == vars && polys.insert(p) {
                    found += 1;
                }
            }
        }
    }
    let tables = gen::all_tables(4, 7, 0);
    let arg_sets: [&[u64]; 4] = [&[0, 0], &[1, 5], &[3, 2], &[6, 7]];
    let cfg = WitnessConfig { method: NormMethod::Table, ..WitnessConfig::default() };
    let mut tuples = 0u64;
    for p in &polys {
        let wt = witness_terms(p).expect("regularized");
        let fs_needed = p.num_functions() > 0;
        for args in arg_sets {
            let xs: Vec<Nat> = args[..p.num_vars()].iter().map(|&x| nat(x)).collect();
            for f in if fs_needed { &tables[..] } else { &tables[..1] } {
                match witness_check(p, &wt.terms, std::slice::from_ref(f), &xs, 0..=255, &cfg) {
                    Ok(r) => {
                        tuples += r.tuples;
                        tally.checks += r.checked - 1;
                        tally.check(r.disagreements.is_empty(), || {
                            format!("P = {p}, f = {f}, x = {args:?}: {:?}", r.disagreements[0])
                        });
                    }
                    Err(e) => tally.check(false, || format!("P = {p}, f = {f}: {e}")),
                }
            }
        }
    }
    format!("{} regular polynomials, 4096 tables, {tuples} witness tuples", polys.len())
}

fn kstar_equivalence(tally: &mut Tally) -> String {
    let bits = |v: u64| u64::from(64 - v.leading_zeros());
    let fs: Vec<Nat> = (0..4096u64).map(nat).collect();
    for k in 0..4096u64 {
        let ks = kstar(&fs[k as usize]);
        let mut bad = None;
        for (f, fv) in fs.iter().enumerate() {
            if (*fv <= ks) != (bits(f as u64) <= bits(k)) {
                bad.get_or_insert(f);
            }
        }
        tally.checks += 4095;
        tally.check(bad.is_none(), || format!("K = {k}, F = {}", bad.unwrap()));
    }
    "F, K in [0, 4095]".into()
}

/// Plain recursion on `u` by halving, without any clamping.
fn mlrn_reference(
    c: &MlrnCase,
    oracles: &mut [Oracle],
    u: u64,
    alpha: &[Nat],
    memo: &mut HashMap<u64, Vec<Nat>>,
    bounds_ok: &mut bool,
) -> Result<Vec<Nat>, EvalError> {
    if let Some(v) = memo.get(&u) {
        return Ok(v.clone());
    }
    let opts = EvalOptions::default();
    let mut ledger = CostLedger::default();
    let vals: Vec<Nat> = if u == 0 {
        c.g.iter().map(|t| eval(t, oracles, alpha, &mut ledger, &opts)).collect::<Result<_, _>>()?
    } else {
        let prev = mlrn_reference(c, oracles, u / 2, alpha, memo, bounds_ok)?;
        let mut args = vec![nat(u)];
        args.extend(prev);
        args.extend_from_slice(alpha);
        c.h.iter().map(|t| eval(t, oracles, &args, &mut ledger, &opts)).collect::<Result<_, _>>()?
    };
    for (i, t) in c.k.iter().enumerate() {
        let mut args = vec![nat(u)];
        args.extend_from_slice(alpha);
        args.extend_from_slice(&vals[..i]);
        if vals[i] > eval(t, oracles, &args, &mut ledger, &opts)? {
            *bounds_ok = false;
        }
    }
    memo.insert(u, vals.clone());
    Ok(vals)
}

struct MlrnCase {
    functions: usize,
    params: usize,
    g: Vec<Term>,
    h: Vec<Term>,
    k: Vec<Term>,
}

fn t(s: &str) -> Term {
    parse_term(s).expect("built-in term")
}

fn mlrn_fixture() -> MlrnCase {
    MlrnCase {
        functions: 0,
        params: 0,
        g: vec![t("0"), t("1")],
        h: vec![t("(comp add (x 1) 1)"), t("(comp mul 2 (x 2))")],
        k: vec![t("(comp add (x 0) 1)"), t("(comp smash 1 (x 0))")],
    }
}

fn mlrn_three() -> MlrnCase {
    MlrnCase {
        functions: 1,
        params: 1,
        g: vec![t("(x 0)"), t("1"), t("(comp min (ap 0 (x 0)) 1)")],
        h: vec![
            t("(comp min (comp add (x 1) 1) (comp add (x 0) (comp add (x 4) 1)))"),
            t("(comp min (comp mul 2 (x 2)) (comp smash 2 (x 0)))"),
            t("(comp min (comp add (x 3) (comp add (x 1) (ap 0 (x 2)))) (comp smash (x 0) (comp s1 (x 4))))"),
        ],
        k: vec![
            t("(comp add (x 0) (comp add (x 1) 1))"),
            t("(comp smash 2 (x 0))"),
            t("(comp add (x 3) (comp smash (x 0) (comp s1 (x 1))))"),
        ],
    }
}

/// A random two-functional system whose bounds hold by construction:
/// `K_1 = B_1(u, α)`, `K_2 = v_1 + B_2(u, α)`, and each `H_i`, `G_i` is cut
/// down to `B_i`.
fn mlrn_random(rng: &mut StdRng) -> MlrnCase {
    let functions = rng.gen_range(0..=1);
    let params = rng.gen_range(0..=1);
    let n = 2;
    let alpha_at = |base: usize| (0..params).map(move |i| Term::Var(base + i));
    let bound = |rng: &mut StdRng| {
        Term::call(crate::terms::Builtin::Add, vec![gen::term(rng, functions, 1 + params, 2), Term::Var(0)])
    };
    let b: Vec<Term> = (0..n).map(|_| bound(rng)).collect();
    let b_at = |i: usize, u: Term, alpha_base: usize| {
        let mut args = vec![u];
        args.extend(alpha_at(alpha_base));
        Term::comp(b[i].clone(), args)
    };
    let min = |a: Term, c: Term| Term::call(crate::terms::Builtin::Min, vec![a, c]);
    let g = (0..n).map(|i| min(gen::term(rng, functions, params, 2), b_at(i, Term::lit(0), 0))).collect();
    let h = (0..n).map(|i| min(gen::term(rng, functions, 1 + n + params, 3), b_at(i, Term::Var(0), 1 + n))).collect();
    let k = vec![
        b[0].clone(),
        Term::call(crate::terms::Builtin::Add, vec![Term::Var(1 + params), b_at(1, Term::Var(0), 1)]),
    ];
    MlrnCase { functions, params, g, h, k }
}

fn mlrn_construction(rng: &mut StdRng, tally: &mut Tally) -> String {
    let mut cases = vec![mlrn_fixture()];
    let mut rejected = 0;
    while cases.len() < 21 {
        let c = mlrn_random(rng);
        // keep systems whose values stay small enough to sweep quickly
        let mut probe = CostLedger::default();
        let ok = MlrnSystem::from_terms(c.functions, c.params, c.g.clone(), c.h.clone(), c.k.clone()).is_ok_and(|sys| {
            let fs = compile_mlrn(&sys);
            let mut oracles = vec![gen::table(rng, 16, 255, 1); c.functions];
            let alpha = gen::nats(rng, c.params, 64);
            let mut ctx = EvalCtx::new(&mut probe, EvalOptions::default());
            let mut args = vec![nat(1023)];
            args.extend(alpha);
            fs[1].apply(&mut oracles, &args, &mut ctx).is_ok()
        });
        if ok {
            cases.push(c);
        } else {
            rejected += 1;
        }
    }
    cases.push(mlrn_three());

    let mut bound_failures = 0;
    for (ci, c) in cases.iter().enumerate() {
        let sys = MlrnSystem::from_terms(c.functions, c.params, c.g.clone(), c.h.clone(), c.k.clone())
            .expect("validated above");
        let fs = compile_mlrn(&sys);
        let mut oracles: Vec<Oracle> = (0..c.functions).map(|_| gen::table(rng, 32, 1023, 3)).collect();
        let alpha = gen::nats(rng, c.params, 200);
        let mut memo = HashMap::new();
        let mut bounds_ok = true;
        for u in 0..1024u64 {
            let want = match mlrn_reference(c, &mut oracles, u, &alpha, &mut memo, &mut bounds_ok) {
                Ok(v) => v,
                Err(e) => {
                    tally.check(false, || format!("system {ci}, u = {u}: reference failed: {e}"));
                    continue;
                }
            };
            let mut args = vec![nat(u)];
            args.extend(alpha.iter().cloned());
            for (i, f) in fs.iter().enumerate() {
                let mut ledger = CostLedger::default();
                let mut ctx = EvalCtx::new(&mut ledger, EvalOptions::default());
                let got = f.apply(&mut oracles, &args, &mut ctx);
                tally.check(got.as_ref() == Ok(&want[i]), || {
                    format!("system {ci}, F{} at u = {u}: {got:?} vs {}", i + 1, want[i])
                });
            }
        }
        if !bounds_ok {
            bound_failures += 1;
        }
    }
    tally.check(bound_failures == 0, || format!("{bound_failures} systems broke their bounds"));
    format!("{} systems (fixture, {} random, one with n = 3), u < 1024; {rejected} candidates rejected", cases.len(), cases.len() - 2)
}

fn pbrpl_candidates() -> Vec<(String, PbrplSystem)> {
    let gs = ["(x 0)", "(ap 0 (x 0))", "(comp half (x 0))"];
    let hs = [
        "(ap 0 (x 1))",
        "(comp min (x 1) (ap 0 (x 1)))",
        "(comp condle (ap 0 (x 1)) (x 1) (x 1) (ap 0 (x 1)))",
        "(comp half (x 1))",
        "(comp min (x 1) (ap 0 (x 0)))",
        "(comp add (x 1) 1)",
        "(ap 0 (x 2))",
    ];
    let ps = [
        "(+ (lx 0) (c 1))",
        "(+ (nf 0 (lx 0)) (c 1))",
        "(+ (nf 0 (nf 0 (lx 0))) (lx 0))",
        "(* (c 2) (+ (lx 0) (c 1)))",
        "(c 8)",
    ];
    let qs = ["(c 3)", "(+ (nf 0 (lx 0)) (lx 0))"];
    let mut out = Vec::new();
    for g in gs {
        for h in hs {
            for p in ps {
                for q in qs {
                    let sys = PbrplSystem::from_terms(
                        1,
                        1,
                        t(g),
                        t(h),
                        parse_sop(p).expect("built-in"),
                        parse_sop(q).expect("built-in"),
                    )
                    .expect("built-in system");
                    out.push((format!("G={g} H={h} P={p} Q={q}"), sys));
                }
            }
        }
    }
    out
}

fn pbrpl_clock(rng: &mut StdRng, tally: &mut Tally) -> String {
    let tables: Vec<Oracle> = (0..16).map(|_| gen::table(rng, 8, 7, 0)).collect();
    let domain: Vec<(Vec<Oracle>, Vec<Nat>)> =
        tables.iter().flat_map(|f| (0..8u64).map(move |x| (vec![f.clone()], vec![nat(x)]))).collect();
    let cfg = ClockConfig::default();
    let mut passing = 0;
    let mut candidates = 0;
    let mut norm_clocked = 0;
    for (name, sys) in pbrpl_candidates() {
        candidates += 1;
        match validate_pbrpl(&sys, &domain, &cfg) {
            Ok(r) if r.passed() => {}
            Ok(_) => continue,
            Err(e) => {
                tally.check(false, || format!("{name}: validation failed: {e}"));
                continue;
            }
        }
        passing += 1;
        if sys.p.depth() > 0 {
            norm_clocked += 1;
        }
        for (fs, xs) in &domain {
            let mut ledger = CostLedger::default();
            let mut ctx = EvalCtx::new(&mut ledger, cfg.eval);
            let mut clocked_fs = fs.clone();
            let clocked = eval_pbrpl_clocked(&sys, &mut clocked_fs, xs, &mut ctx, &cfg);
            let mut plain_fs = fs.clone();
            let plain = eval_pbrpl_unclocked(&sys, &mut plain_fs, xs, &mut ctx, &cfg);
            match (clocked, plain) {
                (Ok(run), Ok(v)) => {
                    let p_star = run.p_star.last().copied().unwrap_or(0);
                    tally.check(run.value == v && run.abort_u + 1 > p_star, || {
                        format!("{name}, f = {}, x = {}: clocked {} vs {v}", fs[0], xs[0], run.value)
                    });
                    // every point used under the clock is used by the plain recursion up to the abort
                    let mut fs2 = fs.clone();
                    let mut ctx2 = EvalCtx::new(&mut ledger, cfg.eval);
                    let _ = iterate_pbrpl(&sys, &mut fs2, xs, run.abort_u, &mut ctx2);
                    let plain_points = fs2[0].queried_points();
                    tally.check(run.queried[0].is_subset(&plain_points), || format!("{name}: clock queried extra points"));
                }
                (Err(SchemeError::NonTermination { .. }), _) => {
                    tally.check(false, || format!("{name}, f = {}, x = {}: clock never fired", fs[0], xs[0]))
                }
                (c, p) => tally.check(false, || format!("{name}, f = {}, x = {}: {c:?} / {p:?}", fs[0], xs[0])),
            }
        }
    }
    tally.check(passing >= 10, || format!("only {passing} systems passed validation"));
    format!(
        "{passing} of {candidates} candidate systems validated ({norm_clocked} with a norm-dependent clock), {} instances each",
        domain.len()
    )
}

fn majorization(rng: &mut StdRng, tally: &mut Tally) -> String {
    let cfg = MajorizationConfig { method: NormMethod::Table, ..MajorizationConfig::default() };
    let mut accepted = 0;
    let mut rejected = 0;
    let mut skipped = 0;
    while accepted < 500 {
        let numbers = rng.gen_range(1..=2);
        let term = gen::term(rng, 1, numbers, 4);
        let b = infer_bound(&term);
        let samples: Vec<(Vec<Oracle>, Vec<Nat>)> = (0..200)
            .map(|_| {
                let default = rng.gen_range(0..4);
                let f = gen::table(rng, 16, 255, default);
                (vec![f], gen::nats(rng, numbers, 256))
            })
            .collect();
        let report = match check_majorization(&term, &b, &samples, &cfg) {
            Ok(r) => r,
            Err(e) => {
                tally.check(false, || format!("{term}: {e}"));
                continue;
            }
        };
        if report.eval_failures > 0 {
            rejected += 1;
            continue;
        }
        accepted += 1;
        skipped += report.skipped;
        tally.checks += report.checked.saturating_sub(1) as u64;
        tally.check(report.passed() && report.skipped == 0, || {
            format!("{term} with bound {b}: {:?}, {} skipped", report.violations.first(), report.skipped)
        });
    }
    format!("{accepted} terms x 200 samples; {rejected} terms rejected for size or fuel; {skipped} samples skipped")
}

fn machine(name: &str) -> Machine {
    parse_machine(bundled(name).expect("bundled")).expect("bundled machine parses")
}

fn otm_protocol(rng: &mut StdRng, tally: &mut Tally) -> String {
    let mut oracles: Vec<Oracle> = (0..6).map(|_| gen::table(rng, 256, 255, 0)).collect();
    oracles.push(Oracle::identity_on(256, 0));
    oracles.push(Oracle::constant(nat(0)));
    oracles.push(gen::table(rng, 16, 4095, 7));
    let mut runs = 0;
    for name in ["ap", "twice", "inc"] {
        let m = machine(name);
        let tin = m.tape(TapeKind::OracleIn(0));
        let tout = m.tape(TapeKind::OracleOut(0));
        let fs_list: Vec<Option<&Oracle>> =
            if m.oracle_count() > 0 { oracles.iter().map(Some).collect() } else { vec![None] };
        for f in fs_list {
            for x in 0..256u64 {
                let mut fs: Vec<Oracle> = f.cloned().into_iter().collect();
                let mut protocol_ok = true;
                let r = run_observed(&m, &mut fs, &nat(x), 1 << 16, |c, ev| {
                    if let StepEvent::Queried { .. } = ev {
                        let (i, o) = (tin.expect("oracle tape"), tout.expect("oracle tape"));
                        protocol_ok &= c.tapes[i].extent() == 0 && c.tapes[i].head == 0 && c.tapes[o].head == 0;
                    }
                });
                runs += 1;
                let Ok(r) = r else {
                    tally.check(false, || format!("{name} on {x}: {r:?}"));
                    continue;
                };
                let want = match (name, f) {
                    ("ap", Some(f)) => f.value(&nat(x)),
                    ("twice", Some(f)) => f.value(&f.value(&nat(x))),
                    _ => nat(x + 1),
                };
                tally.check(r.output == want, || format!("{name} on {x}: output {} expected {want}", r.output));
                let answer_bits: u64 = fs.iter().flat_map(|f| f.log().iter().map(|z| len(&f.value(z)))).sum();
                tally.check(r.t_len + r.queries == r.t_unit + answer_bits, || {
                    format!("{name} on {x}: T_len {} T_unit {} q {} sum {answer_bits}", r.t_len, r.t_unit, r.queries)
                });
                tally.check(protocol_ok, || format!("{name} on {x}: oracle tapes not reset after a query"));
            }
        }
    }
    format!("{runs} runs of ap, twice and inc")
}

fn otm_time_bounds(rng: &mut StdRng, tally: &mut Tally) -> String {
    let tables: Vec<Oracle> = (0..16)
        .map(|_| {
            let default = rng.gen_range(0..8);
            gen::table(rng, 16, 4095, default)
        })
        .collect();
    let cfg = TimeBoundConfig { method: NormMethod::Table, ..TimeBoundConfig::default() };
    let mut steps = 0;
    for name in ["ap", "twice", "inc", "halt"] {
        let m = machine(name);
        let p = parse_sop(bundled_bound(name).expect("bundled")).expect("bundled bound parses");
        let samples: Vec<(Vec<Oracle>, Nat)> =
            tables.iter().flat_map(|f| (0..256u64).map(move |x| (vec![f.clone()], nat(x)))).collect();
        match check_time_bound(&m, &p, &samples, &cfg) {
            Ok(r) => {
                steps += r.steps_monitored;
                tally.checks += r.checked as u64;
                tally.check(r.passed() && r.skipped == 0, || format!("{name}: {:?}", r.violations.first()));
            }
            Err(e) => tally.check(false, || format!("{name}: {e}")),
        }
    }
    format!("4 machines x 16 tables x 256 inputs, {steps} monitored steps")
}

fn regularization(rng: &mut StdRng, tally: &mut Tally) -> String {
    let mut polys = 0;
    let mut merged = 0;
    while polys < 200 {
        let (depth, vars, functions) = (rng.gen_range(0..=3), rng.gen_range(1..=3), rng.gen_range(1..=2));
        let p = gen::sop(rng, depth, vars, functions, 5);
        polys += 1;
        let r = regularize(&p);
        if r != p {
            merged += 1;
        }
        tally.check(is_regular(&r), || format!("regularize({p}) = {r} is not regular"));
        tally.check(r.depth() == p.depth(), || format!("regularize({p}) changed the depth"));
        let mut violations = 0;
        let mut first = None;
        for _ in 0..1000 {
            let fs: Vec<Oracle> = (0..2)
                .map(|_| {
                    let default = rng.gen_range(0..16);
                    gen::table(rng, 16, 255, default)
                })
                .collect();
            let lens: Vec<u64> = (0..3).map(|_| rng.gen_range(0..8)).collect();
            let env = SopEnv::new(lens.clone(), &fs).with_method(NormMethod::Table);
            match (sop_eval(&r, &env), sop_eval(&p, &env)) {
                (Ok(a), Ok(b)) if a >= b => {}
                other => {
                    violations += 1;
                    first.get_or_insert(format!("{p} at {lens:?}: {other:?}"));
                }
            }
        }
        tally.checks += 999;
        tally.check(violations == 0, || first.unwrap_or_default());
    }
    format!("{polys} polynomials ({merged} changed) x 1000 environments")
}
