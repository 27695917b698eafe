use super::{validate_term, Builtin, Oracle, Rank, RankError, Term};
use crate::nat::{len, monus, msp, ones, smash, Nat};
use num_traits::Zero;
use std::rc::Rc;

/// Resource accounting for one or more evaluations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostLedger {
    /// Applications of basis and builtin functions.
    pub builtin_steps: u64,
    /// Oracle calls, each charged 1 (unit cost).
    pub oracle_queries: u64,
    /// Sum of `|f(z)|` over oracle calls (length cost).
    pub kc_oracle_cost: u64,
    /// Largest bit length of any intermediate value.
    pub peak_value_bits: u64,
    /// Recursion-on-notation unfoldings.
    pub recursion_steps: u64,
    /// Times a recursion value was cut down to its `K*` bound.
    pub clamp_activations: u64,
}

impl CostLedger {
    pub fn absorb(&mut self, other: &CostLedger) {
        self.builtin_steps += other.builtin_steps;
        self.oracle_queries += other.oracle_queries;
        self.kc_oracle_cost += other.kc_oracle_cost;
        self.peak_value_bits = self.peak_value_bits.max(other.peak_value_bits);
        self.recursion_steps += other.recursion_steps;
        self.clamp_activations += other.clamp_activations;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Budget shared by builtin applications, oracle calls and recursion
    /// unfoldings.
    pub fuel: u64,
    /// Fail with [`EvalError::BoundViolation`] instead of clamping when a
    /// recursion step exceeds its bound.
    pub strict: bool,
    /// Largest admissible intermediate value, in bits.
    pub max_value_bits: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { fuel: 10_000_000, strict: false, max_value_bits: 1 << 22 }
    }
}

impl EvalOptions {
    pub fn strict() -> Self {
        EvalOptions { strict: true, ..Default::default() }
    }

    pub fn with_fuel(fuel: u64) -> Self {
        EvalOptions { fuel, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("ill-ranked term: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<RankError>),
    #[error("expected rank {expected}, called with {found}")]
    Arity { expected: Rank, found: Rank },
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("bound violated: value of {value_bits} bits exceeds bound of {bound_bits} bits")]
    BoundViolation { value_bits: u64, bound_bits: u64 },
    #[error("intermediate value of {bits} bits exceeds limit of {limit} bits")]
    ValueTooLarge { bits: u64, limit: u64 },
}

/// Evaluation state shared across nested calls: the ledger, options and the
/// remaining fuel.
pub struct EvalCtx<'l> {
    pub ledger: &'l mut CostLedger,
    pub opts: EvalOptions,
    fuel: u64,
}

impl<'l> EvalCtx<'l> {
    pub fn new(ledger: &'l mut CostLedger, opts: EvalOptions) -> Self {
        EvalCtx { ledger, opts, fuel: opts.fuel }
    }

    pub fn fuel_left(&self) -> u64 {
        self.fuel
    }

    pub fn tick(&mut self) -> Result<(), EvalError> {
        if self.fuel == 0 {
            return Err(EvalError::FuelExhausted);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn admit_bits(&mut self, bits: u64) -> Result<(), EvalError> {
        if bits > self.opts.max_value_bits {
            return Err(EvalError::ValueTooLarge { bits, limit: self.opts.max_value_bits });
        }
        self.ledger.peak_value_bits = self.ledger.peak_value_bits.max(bits);
        Ok(())
    }

    /// Cuts `v` down to `K* = 2^|bound| - 1`, or fails in strict mode.
    pub fn clamp(&mut self, v: Nat, bound: &Nat) -> Result<Nat, EvalError> {
        if len(&v) <= len(bound) {
            return Ok(v);
        }
        self.ledger.clamp_activations += 1;
        if self.opts.strict {
            return Err(EvalError::BoundViolation { value_bits: len(&v), bound_bits: len(bound) });
        }
        Ok(ones(len(bound)))
    }

    pub fn query(&mut self, oracle: &mut Oracle, x: &Nat) -> Result<Nat, EvalError> {
        self.tick()?;
        let v = oracle.query(x);
        self.ledger.oracle_queries += 1;
        self.ledger.kc_oracle_cost += len(&v);
        self.admit_bits(len(&v))?;
        Ok(v)
    }
}

/// Anything that can be applied like a functional of a fixed rank.
pub trait Functional {
    fn rank(&self) -> Rank;

    /// Applies the functional. `oracles` may be longer than the rank's
    /// function arity; only the leading ones are visible.
    fn apply(&self, oracles: &mut [Oracle], args: &[Nat], ctx: &mut EvalCtx) -> Result<Nat, EvalError>;
}

pub type FunctionalRef = Rc<dyn Functional>;

type HostBody = dyn Fn(&mut [Oracle], &[Nat], &mut EvalCtx) -> Result<Nat, EvalError>;

/// A functional implemented directly in Rust.
#[derive(Clone)]
pub struct HostFn {
    rank: Rank,
    body: Rc<HostBody>,
}

impl HostFn {
    pub fn new<F>(rank: Rank, body: F) -> HostFn
    where
        F: Fn(&mut [Oracle], &[Nat], &mut EvalCtx) -> Result<Nat, EvalError> + 'static,
    {
        HostFn { rank, body: Rc::new(body) }
    }

    pub fn into_ref(self) -> FunctionalRef {
        Rc::new(self)
    }
}

impl std::fmt::Debug for HostFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HostFn{}", self.rank)
    }
}

impl Functional for HostFn {
    fn rank(&self) -> Rank {
        self.rank
    }

    fn apply(&self, oracles: &mut [Oracle], args: &[Nat], ctx: &mut EvalCtx) -> Result<Nat, EvalError> {
        if args.len() != self.rank.numbers || oracles.len() < self.rank.functions {
            return Err(EvalError::Arity {
                expected: self.rank,
                found: Rank::new(oracles.len(), args.len()),
            });
        }
        (self.body)(oracles, args, ctx)
    }
}

/// A term validated at a fixed rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedTerm {
    term: Term,
    rank: Rank,
}

impl CheckedTerm {
    pub fn new(term: Term, rank: Rank) -> Result<CheckedTerm, Vec<RankError>> {
        validate_term(&term, rank)?;
        Ok(CheckedTerm { term, rank })
    }

    /// Validates at the term's least rank.
    pub fn at_least_rank(term: Term) -> Result<CheckedTerm, Vec<RankError>> {
        let rank = term.rank();
        CheckedTerm::new(term, rank)
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn into_ref(self) -> FunctionalRef {
        Rc::new(self)
    }
}

impl Functional for CheckedTerm {
    fn rank(&self) -> Rank {
        self.rank
    }

    fn apply(&self, oracles: &mut [Oracle], args: &[Nat], ctx: &mut EvalCtx) -> Result<Nat, EvalError> {
        if args.len() != self.rank.numbers || oracles.len() < self.rank.functions {
            return Err(EvalError::Arity {
                expected: self.rank,
                found: Rank::new(oracles.len(), args.len()),
            });
        }
        eval_term(&self.term, &mut oracles[..self.rank.functions], args, ctx)
    }
}

/// Evaluates `t` at rank `(oracles.len(), args.len())` with fresh fuel.
/// Every oracle call is appended to the oracle's query log.
pub fn eval(
    t: &Term,
    oracles: &mut [Oracle],
    args: &[Nat],
    ledger: &mut CostLedger,
    opts: &EvalOptions,
) -> Result<Nat, EvalError> {
    validate_term(t, Rank::new(oracles.len(), args.len())).map_err(EvalError::Invalid)?;
    let mut ctx = EvalCtx::new(ledger, *opts);
    eval_term(t, oracles, args, &mut ctx)
}

/// Applies an extended-basis primitive.
///
/// Panics if `args.len()` differs from the builtin's arity.
pub fn eval_builtin(b: Builtin, args: &[Nat]) -> Nat {
    assert_eq!(args.len(), b.arity(), "arity of {}", b.name());
    match b {
        Builtin::Add => &args[0] + &args[1],
        Builtin::Mul => &args[0] * &args[1],
        Builtin::Len => Nat::from(len(&args[0])),
        Builtin::Half => &args[0] >> 1u32,
        Builtin::Msp => msp(&args[0], &args[1]),
        Builtin::Monus => monus(&args[0], &args[1]),
        Builtin::Min => args[0].clone().min(args[1].clone()),
        Builtin::CondLe => {
            if args[0] <= args[1] {
                args[2].clone()
            } else {
                args[3].clone()
            }
        }
    }
}

/// Bit length the result of `b` may reach, used to refuse oversized values
/// before computing them.
fn builtin_result_bits(b: Builtin, args: &[Nat]) -> u64 {
    match b {
        Builtin::Add => len(&args[0]).max(len(&args[1])) + 1,
        Builtin::Mul => len(&args[0]) + len(&args[1]),
        _ => 0,
    }
}

pub(crate) fn eval_term(
    t: &Term,
    oracles: &mut [Oracle],
    args: &[Nat],
    ctx: &mut EvalCtx,
) -> Result<Nat, EvalError> {
    let v = match t {
        Term::Zero => {
            ctx.tick()?;
            Nat::zero()
        }
        Term::SuccZero | Term::SuccOne => {
            ctx.tick()?;
            ctx.admit_bits(len(&args[0]) + 1)?;
            let doubled = &args[0] << 1u32;
            if matches!(t, Term::SuccOne) {
                doubled + 1u32
            } else {
                doubled
            }
        }
        Term::Proj { index, .. } => {
            ctx.tick()?;
            args[index - 1].clone()
        }
        Term::Smash => {
            ctx.tick()?;
            ctx.admit_bits(len(&args[0]) * len(&args[1]) + 1)?;
            smash(&args[0], &args[1])
        }
        Term::ApOracle(j) => ctx.query(&mut oracles[*j], &args[0])?,
        Term::Builtin(b) => {
            ctx.tick()?;
            ctx.admit_bits(builtin_result_bits(*b, args))?;
            eval_builtin(*b, args)
        }
        Term::Var(i) => args[*i].clone(),
        Term::Lit(n) => n.clone(),
        Term::Comp { head, args: gs } => {
            let inner = gs
                .iter()
                .map(|g| eval_term(g, oracles, args, ctx))
                .collect::<Result<Vec<_>, _>>()?;
            eval_term(head, oracles, &inner, ctx)?
        }
        Term::Expand { inner, functions, numbers } => {
            let k = oracles.len() - functions;
            let l = args.len() - numbers;
            eval_term(inner, &mut oracles[..k], &args[..l], ctx)?
        }
        Term::Lrn { g, h1, h2, k } => {
            recurse_on_notation(g, k, oracles, args, ctx, |p, half, prev| {
                let step = if p.bit(0) { h2 } else { h1 };
                (step.as_ref(), [half, prev])
            })?
        }
        Term::Lrn1 { g, h, k } => {
            recurse_on_notation(g, k, oracles, args, ctx, |p, _half, prev| (h.as_ref(), [p, prev]))?
        }
    };
    ctx.admit_bits(len(&v))?;
    Ok(v)
}

/// Unfolds recursion on notation bottom-up over the prefixes `y ↾ i` of the
/// recursion argument, clamping every value to `K*` of that prefix.
fn recurse_on_notation<'t, S>(
    g: &Term,
    k: &Term,
    oracles: &mut [Oracle],
    args: &[Nat],
    ctx: &mut EvalCtx,
    step: S,
) -> Result<Nat, EvalError>
where
    S: Fn(Nat, Nat, Nat) -> (&'t Term, [Nat; 2]),
{
    let (params, y) = args.split_at(args.len() - 1);
    let y = &y[0];
    let with_last = |extra: &[Nat]| params.iter().cloned().chain(extra.iter().cloned()).collect::<Vec<_>>();

    let mut v = eval_term(g, oracles, params, ctx)?;
    let bound = eval_term(k, oracles, &with_last(&[Nat::zero()]), ctx)?;
    v = ctx.clamp(v, &bound)?;
    for i in 1..=len(y) {
        ctx.tick()?;
        ctx.ledger.recursion_steps += 1;
        let prefix = msp(y, &Nat::from(i));
        let half = &prefix >> 1u32;
        let (h, extra) = step(prefix.clone(), half, v);
        let next = eval_term(h, oracles, &with_last(&extra), ctx)?;
        let bound = eval_term(k, oracles, &with_last(&[prefix]), ctx)?;
        v = ctx.clamp(next, &bound)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::nat;

    fn run(t: &Term, oracles: &mut [Oracle], args: &[u64]) -> Result<Nat, EvalError> {
        let args: Vec<Nat> = args.iter().map(|&a| nat(a)).collect();
        eval(t, oracles, &args, &mut CostLedger::default(), &EvalOptions::default())
    }

    /// `|y|` by recursion on notation: `G = 0`, `H(y, prev) = prev + 1`,
    /// `K(y) = y + 1`.
    fn length_by_recursion() -> Term {
        Term::lrn1(
            Term::lit(0),
            Term::call(Builtin::Add, vec![Term::Var(1), Term::lit(1)]),
            Term::call(Builtin::Add, vec![Term::Var(0), Term::lit(1)]),
        )
    }

    #[test]
    fn builtins() {
        assert_eq!(eval_builtin(Builtin::Len, &[nat(0)]), nat(0));
        assert_eq!(eval_builtin(Builtin::Msp, &[nat(13), nat(2)]), nat(3));
        assert_eq!(eval_builtin(Builtin::Msp, &[nat(13), nat(0)]), nat(0));
        assert_eq!(eval_builtin(Builtin::Msp, &[nat(13), nat(7)]), nat(13));
        assert_eq!(eval_builtin(Builtin::Monus, &[nat(2), nat(7)]), nat(0));
        assert_eq!(eval_builtin(Builtin::CondLe, &[nat(2), nat(7), nat(1), nat(0)]), nat(1));
        assert_eq!(eval_builtin(Builtin::CondLe, &[nat(8), nat(7), nat(1), nat(0)]), nat(0));
    }

    #[test]
    fn smash_by_composition() {
        let t = Term::comp(Term::Smash, vec![Term::proj(2, 1), Term::proj(2, 2)]);
        assert_eq!(run(&t, &mut [], &[2, 3]).unwrap(), nat(16));
    }

    #[test]
    fn oracle_application() {
        let mut fs = [Oracle::from_pairs([(0, 5)], 0)];
        let mut ledger = CostLedger::default();
        let v = eval(&Term::ApOracle(0), &mut fs, &[nat(0)], &mut ledger, &EvalOptions::default()).unwrap();
        assert_eq!(v, nat(5));
        assert_eq!(ledger.oracle_queries, 1);
        assert_eq!(ledger.kc_oracle_cost, 3);
        assert_eq!(fs[0].log(), &[nat(0)]);
    }

    #[test]
    fn recursion_computes_length() {
        // brute-force unfolding: F(13) = H(F(6)) = ... = 4 applications of +1.
        assert_eq!(run(&length_by_recursion(), &mut [], &[13]).unwrap(), nat(4));
        for y in 0..300u64 {
            assert_eq!(run(&length_by_recursion(), &mut [], &[y]).unwrap(), nat(64 - y.leading_zeros() as u64));
        }
    }

    #[test]
    fn even_odd_recursion_reverses_bits() {
        // H1 = s0(prev) and H2 = s1(prev) rebuild y bit by bit.
        let t = Term::lrn(
            Term::lit(0),
            Term::comp(Term::SuccZero, vec![Term::Var(1)]),
            Term::comp(Term::SuccOne, vec![Term::Var(1)]),
            Term::Var(0),
        );
        for y in 0..200u64 {
            assert_eq!(run(&t, &mut [], &[y]).unwrap(), nat(y));
        }
    }

    #[test]
    fn clamping_and_strict_mode() {
        // H doubles and adds one each step, K is constant 1: clamped to K* = 1.
        let t = Term::lrn1(
            Term::lit(1),
            Term::call(Builtin::Mul, vec![Term::Var(1), Term::lit(3)]),
            Term::lit(1),
        );
        let mut ledger = CostLedger::default();
        let v = eval(&t, &mut [], &[nat(5)], &mut ledger, &EvalOptions::default()).unwrap();
        assert_eq!(v, nat(1));
        assert_eq!(ledger.clamp_activations, 3);
        let err = eval(&t, &mut [], &[nat(5)], &mut CostLedger::default(), &EvalOptions::strict());
        assert!(matches!(err, Err(EvalError::BoundViolation { .. })));
    }

    #[test]
    fn fuel_runs_out() {
        let opts = EvalOptions::with_fuel(3);
        let err = eval(&length_by_recursion(), &mut [], &[nat(1 << 20)], &mut CostLedger::default(), &opts);
        assert_eq!(err, Err(EvalError::FuelExhausted));
    }

    #[test]
    fn expansion_drops_trailing_arguments() {
        let t = Term::expand(Term::ApOracle(0), 1, 2);
        let mut fs = [Oracle::from_pairs([(4, 9)], 0), Oracle::constant(nat(1))];
        assert_eq!(run(&t, &mut fs, &[4, 100, 200]).unwrap(), nat(9));
    }

    #[test]
    fn rejects_ill_ranked() {
        assert!(matches!(run(&Term::Smash, &mut [], &[1]), Err(EvalError::Invalid(_))));
    }

    #[test]
    fn value_limit() {
        let t = Term::comp(Term::Smash, vec![Term::Var(0), Term::Var(0)]);
        let opts = EvalOptions { max_value_bits: 64, ..Default::default() };
        let err = eval(&t, &mut [], &[nat(1 << 20)], &mut CostLedger::default(), &opts);
        assert!(matches!(err, Err(EvalError::ValueTooLarge { .. })));
    }
}
