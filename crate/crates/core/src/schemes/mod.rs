//! Recursion schemes that stay inside the basic feasible functionals, and
//! the constructions that evaluate them.

mod file;
mod mlrn;
mod pbrn;
mod pbrpl;
mod seq;

pub use file::{parse_scheme, Scheme};
pub use mlrn::{compile_mlrn, direct_mlrn, k_bar, k_hat, MlrnSystem};
pub use pbrn::{eval_pbrn, PbrnSystem};
pub use pbrpl::{
    eval_pbrpl_clocked, eval_pbrpl_unclocked, iterate_pbrpl, validate_pbrpl, ClockConfig, ClockedRun, Condition,
    PbrplReport, PbrplSystem, Violation,
};
pub use seq::{seq_get, SeqError, SequenceCode};

use crate::nat::{len, monus, ones, smash, Nat};
use crate::sop::SopError;
use crate::terms::{EvalCtx, EvalError};

/// `K* = (1 # v) ∸ 1 = 2^|v| - 1`, the largest natural no longer than `v`.
pub fn kstar(v: &Nat) -> Nat {
    monus(&smash(&Nat::from(1u32), v), &Nat::from(1u32))
}

/// `SqBd(a, b) = (2b + 1) # (4 (2a + 1)^2)`, a bound on codes of sequences
/// of at most `|b| + 1` elements, each at most `a`.
pub fn sqbd(a: &Nat, b: &Nat) -> Nat {
    let two_a_one: Nat = a * 2u32 + 1u32;
    let right = &two_a_one * &two_a_one * 4u32;
    smash(&(b * 2u32 + 1u32), &right)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sop(#[from] SopError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("ill-formed system: {0}")]
    IllFormed(String),
    #[error("bound violated at step {step}: value of {value_bits} bits exceeds bound {bound}")]
    BoundViolation { step: Nat, value_bits: u64, bound: u64 },
    #[error("clock did not fire within {cap} steps")]
    NonTermination { cap: u64 },
    #[error("search space too large: {estimate} exceeds cap {cap}")]
    SearchSpaceTooLarge { estimate: u128, cap: u128 },
}

/// Value bound `v <= k`: clamps to `k`, or fails in strict mode.
pub(crate) fn bound_value(v: Nat, k: &Nat, ctx: &mut EvalCtx) -> Result<Nat, EvalError> {
    if v <= *k {
        return Ok(v);
    }
    ctx.ledger.clamp_activations += 1;
    if ctx.opts.strict {
        return Err(EvalError::BoundViolation { value_bits: len(&v), bound_bits: len(k) });
    }
    Ok(k.clone())
}

/// Length bound `|v| <= bound`: clamps to `2^bound - 1`, or fails in
/// strict mode.
pub(crate) fn bound_length(v: Nat, bound: u64, step: &Nat, ctx: &mut EvalCtx) -> Result<Nat, SchemeError> {
    if len(&v) <= bound {
        return Ok(v);
    }
    ctx.ledger.clamp_activations += 1;
    if ctx.opts.strict {
        return Err(SchemeError::BoundViolation { step: step.clone(), value_bits: len(&v), bound });
    }
    Ok(ones(bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nat::nat;

    #[test]
    fn kstar_values() {
        assert_eq!(kstar(&nat(5)), nat(7));
        assert_eq!(kstar(&nat(0)), nat(0));
        assert!(len(&nat(6)) <= len(&nat(5)) && nat(6) <= kstar(&nat(5)));
    }

    #[test]
    fn sqbd_values() {
        assert_eq!(sqbd(&nat(0), &nat(0)), nat(8));
        assert_eq!(sqbd(&nat(1), &nat(2)), nat(262_144));
        assert!(sqbd(&nat(0), &nat(0)) <= sqbd(&nat(1), &nat(0)));
        assert_eq!(sqbd(&nat(1), &nat(0)), nat(64));
    }

    #[test]
    fn sqbd_exponent() {
        // SqBd(a, b) = 2^((|b|+1)·|4(2a+1)^2|)
        for a in 0..40u64 {
            for b in 0..40u64 {
                let e = (len(&nat(b)) + 1) * len(&nat(4 * (2 * a + 1) * (2 * a + 1)));
                assert_eq!(sqbd(&nat(a), &nat(b)), crate::nat::pow2(e));
            }
        }
    }
}
