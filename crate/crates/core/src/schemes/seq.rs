//! Sequence coding with fixed-width blocks.
//!
//! A sequence of `L` elements at width `w` has payload
//! `block_0 block_1 ... block_{L-1}` (element 0 most significant), where each
//! block is `w` bits: a 1 marker followed by the element in `w - 1` bits.
//! As a single natural the code carries a header block `1^(w-1) 0` in front
//! of the payload, so the width and length can be read back from the number
//! alone.

use crate::nat::{len, pow2, Nat};
use num_traits::{ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeqError {
    #[error("index {index} out of range for length {length}")]
    IndexOutOfRange { index: u64, length: u64 },
    #[error("element of {bits} bits does not fit width {width}")]
    ElementTooWide { bits: u64, width: u64 },
    #[error("not a sequence code")]
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceCode {
    pub width: u64,
    pub payload: Nat,
    pub length: u64,
}

impl SequenceCode {
    /// Empty sequence for elements of at most `a`: width `|a| + 2`.
    pub fn empty(a: &Nat) -> SequenceCode {
        SequenceCode::with_width(len(a) + 2)
    }

    pub fn with_width(width: u64) -> SequenceCode {
        assert!(width >= 2, "sequence width must be at least 2");
        SequenceCode { width, payload: Nat::zero(), length: 0 }
    }

    pub fn encode(items: &[Nat], a: &Nat) -> Result<SequenceCode, SeqError> {
        SequenceCode::encode_width(items, len(a) + 2)
    }

    pub fn encode_width(items: &[Nat], width: u64) -> Result<SequenceCode, SeqError> {
        items.iter().try_fold(SequenceCode::with_width(width), |code, v| code.append(v))
    }

    fn marker(&self) -> Nat {
        pow2(self.width - 1)
    }

    pub fn append(mut self, v: &Nat) -> Result<SequenceCode, SeqError> {
        if len(v) >= self.width {
            return Err(SeqError::ElementTooWide { bits: len(v), width: self.width });
        }
        let marker = self.marker();
        self.payload = (std::mem::take(&mut self.payload) << self.width) + marker + v;
        self.length += 1;
        Ok(self)
    }

    pub fn get(&self, index: u64) -> Result<Nat, SeqError> {
        if index >= self.length {
            return Err(SeqError::IndexOutOfRange { index, length: self.length });
        }
        let shift = self.width * (self.length - 1 - index);
        let block = (&self.payload >> shift) & (pow2(self.width) - 1u32);
        Ok(block - self.marker())
    }

    pub fn decode(&self) -> Vec<Nat> {
        (0..self.length).map(|i| self.get(i).expect("in range")).collect()
    }

    /// Re-encodes at a width of at least `width`.
    pub fn widen(&self, width: u64) -> SequenceCode {
        if width <= self.width {
            return self.clone();
        }
        SequenceCode::encode_width(&self.decode(), width).expect("wider blocks fit")
    }

    /// The code as one natural: header block, then payload.
    pub fn to_nat(&self) -> Nat {
        let header = pow2(self.width) - 2u32;
        (header << (self.width * self.length)) + &self.payload
    }

    pub fn from_nat(n: &Nat) -> Result<SequenceCode, SeqError> {
        let bits = len(n);
        let leading_ones = (0..bits).rev().take_while(|&i| n.bit(i)).count() as u64;
        let width = leading_ones + 1;
        if leading_ones == 0 || !bits.is_multiple_of(width) {
            return Err(SeqError::Malformed);
        }
        let length = bits / width - 1;
        let payload = n & (pow2(width * length) - 1u32);
        let code = SequenceCode { width, payload, length };
        for i in 0..length {
            if !code.payload.bit(width * (length - 1 - i) + width - 1) {
                return Err(SeqError::Malformed);
            }
        }
        Ok(code)
    }
}

/// `(w)_i` on numeric codes: the `i`-th element, or 0 when `w` is no code
/// or `i` is out of range.
pub fn seq_get(w: &Nat, i: &Nat) -> Nat {
    let Some(i) = i.to_u64() else { return Nat::zero() };
    SequenceCode::from_nat(w).and_then(|c| c.get(i)).unwrap_or_default()
}
