//! Helpers over arbitrary-precision naturals.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Natural number with arbitrary precision.
pub type Nat = BigUint;

/// Binary length `|x|`, with `|0| = 0`.
pub fn len(x: &Nat) -> u64 {
    x.bits()
}

/// `2^e`.
pub fn pow2(e: u64) -> Nat {
    Nat::one() << e
}

/// `2^e - 1`, the largest natural of length `e`.
pub fn ones(e: u64) -> Nat {
    pow2(e) - 1u32
}

/// Truncated subtraction.
pub fn monus(x: &Nat, y: &Nat) -> Nat {
    if x > y {
        x - y
    } else {
        Nat::zero()
    }
}

/// The `y` most significant bits of `x`: `x >> (|x| - y)`.
pub fn msp(x: &Nat, y: &Nat) -> Nat {
    let lx = len(x);
    match y.to_u64() {
        Some(y) if y < lx => x >> (lx - y),
        _ => x.clone(),
    }
}

/// `x # y = 2^(|x|·|y|)`.
pub fn smash(x: &Nat, y: &Nat) -> Nat {
    pow2(len(x) * len(y))
}

pub fn nat(v: u64) -> Nat {
    Nat::from(v)
}

/// Saturating conversion to `u64`.
pub fn to_u64_sat(x: &Nat) -> u64 {
    x.to_u64().unwrap_or(u64::MAX)
}

/// Binary numeral, most significant bit first, empty for zero.
pub fn to_bits(x: &Nat) -> Vec<bool> {
    let n = len(x);
    (0..n).rev().map(|i| x.bit(i)).collect()
}

pub fn from_bits(bits: &[bool]) -> Nat {
    let mut v = Nat::zero();
    for &b in bits {
        v <<= 1u32;
        if b {
            v += 1u32;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert_eq!(len(&nat(0)), 0);
        assert_eq!(len(&nat(1)), 1);
        assert_eq!(len(&nat(13)), 4);
        assert_eq!(len(&nat(16)), 5);
    }

    #[test]
    fn msp_matches_axioms() {
        assert_eq!(msp(&nat(13), &nat(2)), nat(3));
        assert_eq!(msp(&nat(13), &nat(0)), nat(0));
        assert_eq!(msp(&nat(13), &nat(7)), nat(13));
        assert_eq!(msp(&nat(13), &nat(1)), nat(1));
        for x in 0u64..200 {
            let x = nat(x);
            for y in 0..len(&x) {
                assert_eq!(msp(&x, &nat(y)), msp(&x, &nat(y + 1)) >> 1u32);
            }
        }
    }

    #[test]
    fn smash_and_bits() {
        assert_eq!(smash(&nat(2), &nat(3)), nat(16));
        assert_eq!(monus(&nat(3), &nat(5)), nat(0));
        assert_eq!(from_bits(&to_bits(&nat(37))), nat(37));
        assert!(to_bits(&nat(0)).is_empty());
    }
}
