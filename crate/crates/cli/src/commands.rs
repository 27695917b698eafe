use std::fmt::Display;
use std::path::Path;
use std::process::ExitCode;

use bfflab_core::bounds::{check_majorization, infer_bound, MajorizationConfig};
use bfflab_core::nat::len;
use bfflab_core::otm::{bundled, check_time_bound, parse_machine, run, Machine, OtmError, TimeBoundConfig};
use bfflab_core::schemes::{
    compile_mlrn, direct_mlrn, eval_pbrn, eval_pbrpl_clocked, eval_pbrpl_unclocked, parse_scheme, validate_pbrpl,
    ClockConfig, Condition, Scheme, SchemeError,
};
use bfflab_core::selftest::{self, gen};
use bfflab_core::sexpr::parse_all;
use bfflab_core::sop::{
    is_regular, parse_sop, regularize, sop_eval, witness_check, witness_terms, NormMethod, Sop, SopEnv, SopError,
    WitnessConfig, DEFAULT_NORM_CAP,
};
use bfflab_core::terms::{eval as eval_term, parse_term, term_from_sexpr, CostLedger, EvalCtx, EvalError, EvalOptions, Oracle, Term};
use bfflab_core::Nat;

use crate::output::{list, seq, Output};
use crate::{BoundCommand, Cost, EvalArgs, Norm, OtmCommand, Sampling, SchemeCommand, SelftestArgs, SopCommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation, unreadable file or malformed input.
    Usage(String),
    /// The computation itself failed or violated a bound.
    Domain(String),
}

impl CliError {
    pub fn report(&self) -> ExitCode {
        match self {
            CliError::Usage(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            CliError::Domain(m) => {
                eprintln!("violation: {m}");
                ExitCode::from(1)
            }
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Invalid(_) | EvalError::Arity { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<SopError> for CliError {
    fn from(e: SopError) -> Self {
        match e {
            SopError::UnassignedVar(_) | SopError::UnassignedFunction(_) => CliError::Usage(e.to_string()),
            SopError::Eval(e) => e.into(),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Eval(e) => e.into(),
            SchemeError::Sop(e) => e.into(),
            SchemeError::IllFormed(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<OtmError> for CliError {
    fn from(e: OtmError) -> Self {
        match e {
            OtmError::OracleCount { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Settings {
    pub method: NormMethod,
    pub norm_cap: u64,
}

impl Settings {
    pub fn from_env(norm: Norm) -> Result<Settings> {
        let norm_cap = match std::env::var("BFFLAB_NORM_CAP") {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("BFFLAB_NORM_CAP: not a number: '{v}'")))?,
            Err(_) => DEFAULT_NORM_CAP,
        };
        let method = match norm {
            Norm::Brute => NormMethod::BruteForce,
            Norm::Table => NormMethod::Table,
        };
        Ok(Settings { method, norm_cap })
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn in_file<E: Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Usage(format!("{}: {e}", path.display()))
}

fn load_term(path: &Path) -> Result<Term> {
    parse_term(&read(path)?).map_err(in_file(path))
}

fn load_sop(path: &Path) -> Result<Sop> {
    parse_sop(&read(path)?).map_err(in_file(path))
}

fn load_oracles(paths: &[impl AsRef<Path>]) -> Result<Vec<Oracle>> {
    paths.iter().map(|p| read(p.as_ref())?.parse().map_err(in_file(p.as_ref()))).collect()
}

fn load_scheme(path: &Path) -> Result<Scheme> {
    parse_scheme(&read(path)?).map_err(in_file(path))
}

fn load_machine(spec: &str) -> Result<Machine> {
    let text = match spec.strip_prefix("bundled:") {
        Some(name) => bundled(name).ok_or_else(|| CliError::Usage(format!("no bundled machine '{name}'")))?.to_string(),
        None => read(Path::new(spec))?,
    };
    parse_machine(&text).map_err(|e| CliError::Usage(format!("{spec}: {e}")))
}

fn options(fuel: Option<u64>, strict: bool) -> EvalOptions {
    let mut o = fuel.map(EvalOptions::with_fuel).unwrap_or_default();
    o.strict = strict;
    o
}

fn ledger_fields(out: &mut Output, ledger: &CostLedger) {
    out.field("ledger.builtin_steps", ledger.builtin_steps)
        .field("ledger.oracle_queries", ledger.oracle_queries)
        .field("ledger.length_cost", ledger.kc_oracle_cost)
        .field("ledger.peak_value_bits", ledger.peak_value_bits)
        .field("ledger.recursion_steps", ledger.recursion_steps)
        .field("ledger.clamp_activations", ledger.clamp_activations);
}

pub fn eval(_: &Settings, a: EvalArgs) -> Result<Output> {
    let t = load_term(&a.term)?;
    let mut oracles = load_oracles(&a.inputs.oracles)?;
    let mut ledger = CostLedger::default();
    let v = eval_term(&t, &mut oracles, &a.inputs.args, &mut ledger, &options(Some(a.fuel), a.strict))?;
    let mut out = Output::new();
    out.value("value", &v).field("value_bits", len(&v));
    ledger_fields(&mut out, &ledger);
    out.field("queried", list(oracles.iter().flat_map(|o| o.log().iter().cloned())));
    Ok(out)
}

fn random_samples(s: &Sampling, functions: usize, numbers: usize) -> Vec<(Vec<Oracle>, Vec<Nat>)> {
    let mut rng = gen::rng(s.seed);
    (0..s.samples)
        .map(|_| {
            let fs = (0..functions)
                .map(|_| {
                    let default = gen::nats(&mut rng, 1, s.max_value + 1).remove(0);
                    let default = bfflab_core::nat::to_u64_sat(&default);
                    gen::table(&mut rng, s.table_size, s.max_value, default)
                })
                .collect();
            (fs, gen::nats(&mut rng, numbers, s.below.max(1)))
        })
        .collect()
}

pub fn bound(settings: &Settings, c: BoundCommand) -> Result<Output> {
    let mut out = Output::new();
    match c {
        BoundCommand::Infer { term } => {
            out.value("bound", infer_bound(&load_term(&term)?));
        }
        BoundCommand::Check { term, sop, sampling } => {
            let t = load_term(&term)?;
            let b = load_sop(&sop)?;
            let rank = t.rank();
            let samples = random_samples(&sampling, rank.functions.max(b.num_functions()), rank.numbers.max(b.num_vars()));
            let cfg = MajorizationConfig { method: settings.method, norm_cap: settings.norm_cap, ..Default::default() };
            let r = check_majorization(&t, &b, &samples, &cfg)?;
            out.labeled("checked", r.checked)
                .labeled("skipped", r.skipped)
                .labeled("eval_failures", r.eval_failures)
                .labeled("violations", r.violations.len());
            for v in &r.violations {
                out.line(format!(
                    "sample {}: args {}: value of {} bits exceeds bound {}",
                    v.sample,
                    seq(&v.args),
                    v.value_bits,
                    v.bound
                ));
                out.field(format!("violation.{}", v.sample), format!("args={} bits={} bound={}", seq(&v.args), v.value_bits, v.bound));
            }
            out.violation(!r.passed());
        }
    }
    Ok(out)
}

pub fn sop(settings: &Settings, c: SopCommand) -> Result<Output> {
    let mut out = Output::new();
    match c {
        SopCommand::Depth { sop } => {
            out.value("depth", load_sop(&sop)?.depth());
        }
        SopCommand::Eval { sop, oracles, lens } => {
            let p = load_sop(&sop)?;
            let fs = load_oracles(&oracles)?;
            let env = SopEnv::new(lens, &fs).with_method(settings.method).with_cap(settings.norm_cap);
            out.value("value", sop_eval(&p, &env)?);
        }
        SopCommand::Regularize { sop } => {
            let p = load_sop(&sop)?;
            let r = regularize(&p);
            out.value("sop", &r).field("regular", is_regular(&r)).field("depth", r.depth()).field("changed", r != p);
        }
        SopCommand::Witness { sop } => {
            let w = witness_terms(&load_sop(&sop)?)?;
            out.field("numbers", w.numbers);
            out.field("witnesses", seq(w.witnesses.iter().map(|(j, d)| format!("f{j}@{d}"))));
            for (i, t) in w.terms.iter().enumerate() {
                out.line(t.to_string()).field(format!("t{i}"), t);
            }
        }
        SopCommand::WitnessCheck { sop, inputs, terms, u_min, u_max } => {
            let p = load_sop(&sop)?;
            let terms = match terms {
                Some(path) => {
                    let src = read(&path)?;
                    let exprs = parse_all(&src).map_err(in_file(&path))?;
                    exprs.iter().map(term_from_sexpr).collect::<std::result::Result<Vec<_>, _>>().map_err(in_file(&path))?
                }
                None => witness_terms(&p)?.terms,
            };
            let fs = load_oracles(&inputs.oracles)?;
            let cfg = WitnessConfig { method: settings.method, norm_cap: settings.norm_cap, ..Default::default() };
            let r = witness_check(&p, &terms, &fs, &inputs.args, u_min..=u_max, &cfg)?;
            out.labeled("polynomial", r.poly_value)
                .labeled("rhs_max", &r.rhs_max)
                .labeled("tuples", r.tuples)
                .labeled("checked", r.checked)
                .labeled("disagreements", r.disagreements.len());
            for d in &r.disagreements {
                out.line(format!("u = {}: |u| <= P is {}, witness side is {}", d.u, d.lhs, d.rhs));
                out.field(format!("disagreement.{}", d.u), format!("lhs={} rhs={}", d.lhs, d.rhs));
            }
            out.violation(!r.disagreements.is_empty());
        }
    }
    Ok(out)
}

pub fn scheme(settings: &Settings, c: SchemeCommand) -> Result<Output> {
    let mut out = Output::new();
    let wrong = |want: &str| CliError::Usage(format!("expected a {want} scheme file"));
    match c {
        SchemeCommand::MlrnRun { file, inputs, u, direct, strict } => {
            let Scheme::Mlrn(sys) = load_scheme(&file)? else { return Err(wrong("mlrn")) };
            let mut oracles = load_oracles(&inputs.oracles)?;
            let mut ledger = CostLedger::default();
            let mut ctx = EvalCtx::new(&mut ledger, options(None, strict));
            let values = if direct {
                direct_mlrn(&sys, &mut oracles, &u, &inputs.args, &mut ctx)?
            } else {
                let mut args = vec![u];
                args.extend(inputs.args);
                compile_mlrn(&sys)
                    .iter()
                    .map(|f| f.apply(&mut oracles, &args, &mut ctx))
                    .collect::<std::result::Result<Vec<_>, _>>()?
            };
            for (i, v) in values.iter().enumerate() {
                out.value(format!("F{}", i + 1), v);
            }
            ledger_fields(&mut out, &ledger);
        }
        SchemeCommand::PbrnRun { file, inputs, y, strict } => {
            let Scheme::Pbrn(sys) = load_scheme(&file)? else { return Err(wrong("pbrn")) };
            let sys = sys.with_method(settings.method).with_cap(settings.norm_cap);
            let mut oracles = load_oracles(&inputs.oracles)?;
            let mut ledger = CostLedger::default();
            let mut ctx = EvalCtx::new(&mut ledger, options(None, strict));
            let v = eval_pbrn(&sys, &mut oracles, &inputs.args, &y, &mut ctx)?;
            out.value("value", v);
            ledger_fields(&mut out, &ledger);
        }
        SchemeCommand::PbrplRun { file, inputs, unclocked, hard_cap } => {
            let Scheme::Pbrpl(sys) = load_scheme(&file)? else { return Err(wrong("pbrpl")) };
            let cfg = ClockConfig { hard_cap, method: NormMethod::Table, norm_cap: settings.norm_cap, ..Default::default() };
            let mut oracles = load_oracles(&inputs.oracles)?;
            let mut ledger = CostLedger::default();
            let mut ctx = EvalCtx::new(&mut ledger, cfg.eval);
            if unclocked {
                out.value("value", eval_pbrpl_unclocked(&sys, &mut oracles, &inputs.args, &mut ctx, &cfg)?);
            } else {
                let r = eval_pbrpl_clocked(&sys, &mut oracles, &inputs.args, &mut ctx, &cfg)?;
                out.value("value", &r.value)
                    .field("abort_u", r.abort_u)
                    .field("p_star", seq(&r.p_star));
                for (j, q) in r.queried.iter().enumerate() {
                    out.field(format!("queried.f{j}"), list(q));
                }
            }
            ledger_fields(&mut out, &ledger);
        }
        SchemeCommand::PbrplValidate { file, oracles, values, no_closure } => {
            let Scheme::Pbrpl(sys) = load_scheme(&file)? else { return Err(wrong("pbrpl")) };
            let candidates = load_oracles(&oracles)?;
            let domain = product(&candidates, sys.functions)
                .into_iter()
                .flat_map(|fs| product(&values, sys.params).into_iter().map(move |xs| (fs.clone(), xs)))
                .collect::<Vec<_>>();
            let cfg = ClockConfig {
                method: NormMethod::Table,
                norm_cap: settings.norm_cap,
                close_under_restrictions: !no_closure,
                ..Default::default()
            };
            let r = validate_pbrpl(&sys, &domain, &cfg)?;
            out.labeled("instances", r.instances.len())
                .labeled("horizon", r.horizon)
                .labeled("pairs_checked", r.pairs_checked);
            for c in [Condition::QBound, Condition::Stabilization, Condition::Locality] {
                out.labeled(format!("violations.{c}"), r.count(c));
            }
            for v in r.violations.iter().take(20) {
                let other = v.other.map(|o| format!(" against instance {o}")).unwrap_or_default();
                out.line(format!("{} fails on instance {}{other} at y = {}", v.condition, v.instance, v.y));
            }
            out.labeled("passed", r.passed()).violation(!r.passed());
        }
    }
    Ok(out)
}

/// Every tuple of length `k` over `items`.
fn product<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    (0..k).fold(vec![Vec::new()], |acc, _| {
        acc.iter()
            .flat_map(|prefix| {
                items.iter().map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x.clone());
                    v
                })
            })
            .collect()
    })
}

pub fn otm(settings: &Settings, c: OtmCommand) -> Result<Output> {
    let mut out = Output::new();
    match c {
        OtmCommand::Run { machine, oracles, input, cost, fuel } => {
            let m = load_machine(&machine)?;
            let mut fs = load_oracles(&oracles)?;
            let r = run(&m, &mut fs, &input, fuel)?;
            let time = match cost {
                Cost::Unit => r.t_unit,
                Cost::Len => r.t_len,
            };
            out.value("output", &r.output)
                .labeled("time", time)
                .field("t_unit", r.t_unit)
                .field("t_len", r.t_len)
                .field("queries", r.queries)
                .field("answer_bits", r.answer_bits)
                .field("halt", format!("{:?}", r.halt).to_lowercase())
                .field("peak", seq(&r.peak))
                .field("malformed_queries", r.malformed_queries);
        }
        OtmCommand::Check { machine, bound, sampling, exhaustive, fuel } => {
            let m = load_machine(&machine)?;
            let p = load_sop(&bound)?;
            let random = random_samples(&sampling, m.oracle_count().max(p.num_functions()), 1);
            let samples: Vec<(Vec<Oracle>, Nat)> = if exhaustive {
                random.into_iter().flat_map(|(fs, _)| (0..sampling.below).map(move |x| (fs.clone(), Nat::from(x)))).collect()
            } else {
                random.into_iter().map(|(fs, mut xs)| (fs, xs.remove(0))).collect()
            };
            let cfg = TimeBoundConfig { fuel, method: settings.method, norm_cap: settings.norm_cap };
            let r = check_time_bound(&m, &p, &samples, &cfg)?;
            out.labeled("checked", r.checked)
                .labeled("skipped", r.skipped)
                .labeled("steps", r.steps_monitored)
                .labeled("queries", r.queries)
                .labeled("violations", r.violations.len());
            for v in r.violations.iter().take(20) {
                out.line(format!("sample {} (input {}): {:?}", v.sample, v.input, v.kind));
                out.field(format!("violation.{}", v.sample), format!("input={} {:?}", v.input, v.kind));
            }
            out.violation(!r.passed());
        }
    }
    Ok(out)
}

pub fn selftest(a: SelftestArgs, report: bool) -> Result<Output> {
    let ids: Vec<usize> =
        if a.criterion.is_empty() { selftest::CRITERIA.iter().map(|c| c.0).collect() } else { a.criterion };
    let mut out = Output::new();
    for id in ids {
        let o = selftest::run_criterion(id, a.seed).ok_or_else(|| CliError::Usage(format!("no criterion {id}")))?;
        out.line(o.to_string());
        if !report {
            for e in &o.examples {
                out.line(format!("    {e}"));
            }
        }
        out.field(format!("criterion.{id}"), if o.passed() { "pass" } else { "fail" })
            .field(format!("criterion.{id}.checks"), o.checks)
            .field(format!("criterion.{id}.failures"), o.failures)
            .violation(!o.passed());
    }
    Ok(out)
}
