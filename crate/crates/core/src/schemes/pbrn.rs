//! Recursion on notation bounded by a second-order polynomial.

use super::{bound_length, SchemeError};
use crate::nat::{len, Nat};
use crate::sop::{sop_eval, NormMethod, Sop, SopEnv, DEFAULT_NORM_CAP};
use crate::terms::{CheckedTerm, EvalCtx, EvalError, FunctionalRef, Oracle, Rank, Term};

/// `F(f, x, 0) = G(f, x)`, `F(f, x, y) = H(f, x, F(f, x, ⌊y/2⌋), y)` and
/// `|F(f, x, y)| <= Q(|f|, |x|, |y|)`, where `|y|` is `Q`'s last variable.
#[derive(Clone)]
pub struct PbrnSystem {
    pub functions: usize,
    pub params: usize,
    pub g: FunctionalRef,
    pub h: FunctionalRef,
    pub q: Sop,
    pub method: NormMethod,
    pub norm_cap: u64,
}

impl std::fmt::Debug for PbrnSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PbrnSystem(rank=({},{}), q={})", self.functions, self.params, self.q)
    }
}

impl PbrnSystem {
    pub fn from_terms(functions: usize, params: usize, g: Term, h: Term, q: Sop) -> Result<PbrnSystem, SchemeError> {
        let check = |t: Term, numbers| {
            CheckedTerm::new(t, Rank::new(functions, numbers))
                .map(CheckedTerm::into_ref)
                .map_err(|e| SchemeError::Eval(EvalError::Invalid(e)))
        };
        let sys = PbrnSystem {
            functions,
            params,
            g: check(g, params)?,
            h: check(h, params + 2)?,
            q,
            method: NormMethod::BruteForce,
            norm_cap: DEFAULT_NORM_CAP,
        };
        if sys.q.num_vars() > params + 1 || sys.q.num_functions() > functions {
            return Err(SchemeError::IllFormed(format!("bound {} uses variables outside the rank", sys.q)));
        }
        Ok(sys)
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

/// Evaluates `F(f, x, y)` over the prefixes of `y`, checking the bound at
/// every prefix including 0. Violations clamp to `2^Q - 1`, or fail in
/// strict mode.
pub fn eval_pbrn(
    sys: &PbrnSystem,
    oracles: &mut [Oracle],
    xs: &[Nat],
    y: &Nat,
    ctx: &mut EvalCtx,
) -> Result<Nat, SchemeError> {
    if xs.len() != sys.params || oracles.len() < sys.functions {
        return Err(EvalError::Arity {
            expected: Rank::new(sys.functions, sys.params + 1),
            found: Rank::new(oracles.len(), xs.len() + 1),
        }
        .into());
    }
    let mut lens: Vec<u64> = xs.iter().map(len).collect();
    lens.push(0);
    let n = len(y);
    let mut value = Nat::default();
    for i in 0..=n {
        let prefix = y >> (n - i);
        ctx.tick()?;
        ctx.ledger.recursion_steps += 1;
        let raw = if i == 0 {
            sys.g.apply(oracles, xs, ctx)?
        } else {
            let mut args = xs.to_vec();
            args.push(value);
            args.push(prefix.clone());
            sys.h.apply(oracles, &args, ctx)?
        };
        lens[sys.params] = i;
        let env = SopEnv::new(lens.clone(), &oracles[..sys.functions])
            .with_method(sys.method)
            .with_cap(sys.norm_cap);
        let bound = sop_eval(&sys.q, &env)?;
        value = bound_length(raw, bound, &prefix, ctx)?;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::nat;
    use crate::sop::parse_sop;
    use crate::terms::{parse_term, CostLedger, EvalOptions};

    fn counter(q: &str) -> PbrnSystem {
        PbrnSystem::from_terms(0, 0, parse_term("0").unwrap(), parse_term("(comp add (x 0) 1)").unwrap(), parse_sop(q).unwrap())
            .unwrap()
    }

    fn run(sys: &PbrnSystem, y: u64, opts: EvalOptions) -> Result<Nat, SchemeError> {
        let mut ledger = CostLedger::default();
        let mut ctx = EvalCtx::new(&mut ledger, opts);
        eval_pbrn(sys, &mut [], &[], &nat(y), &mut ctx)
    }

    #[test]
    fn counts_length() {
        let sys = counter("(+ (lx 0) (c 1))");
        assert_eq!(run(&sys, 13, EvalOptions::strict()).unwrap(), nat(4));
        assert_eq!(run(&sys, 0, EvalOptions::strict()).unwrap(), nat(0));
    }

    #[test]
    fn violation_at_two() {
        let sys = counter("(c 1)");
        let err = run(&sys, 2, EvalOptions::strict()).unwrap_err();
        assert_eq!(err, SchemeError::BoundViolation { step: nat(2), value_bits: 2, bound: 1 });
        assert_eq!(run(&sys, 1, EvalOptions::strict()).unwrap(), nat(1));
        assert_eq!(run(&sys, 7, EvalOptions::default()).unwrap(), nat(1));
    }

    #[test]
    fn zero_bound_at_start() {
        let sys = PbrnSystem::from_terms(0, 0, parse_term("3").unwrap(), parse_term("(x 0)").unwrap(), Sop::c(1))
            .unwrap();
        assert!(matches!(run(&sys, 0, EvalOptions::strict()), Err(SchemeError::BoundViolation { .. })));
        assert_eq!(run(&sys, 0, EvalOptions::default()).unwrap(), nat(1));
    }

    #[test]
    fn rejects_foreign_variables() {
        let err = PbrnSystem::from_terms(0, 0, parse_term("0").unwrap(), parse_term("(x 0)").unwrap(), Sop::lx(3));
        assert!(matches!(err, Err(SchemeError::IllFormed(_))));
    }
}
