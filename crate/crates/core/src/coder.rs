//! Static-model binary arithmetic coder.
//!
//! A carry-propagating range coder over a 32-bit range with a 64-bit low
//! accumulator. The model is a single quantized probability of a one bit,
//! stored on the wire, so encoder and decoder never adapt.
//!
//! Output layout follows the usual cache-byte scheme: the first byte is
//! always zero (the initial cache), and flushing shifts out five bytes.

use bitvec::prelude::*;
use thiserror::Error;

const SCALE: u64 = u32::MAX as u64;
const TOP: u32 = 1 << 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoderError {
    #[error("cannot build a model from an empty bit sequence")]
    EmptyInput,
    #[error("bit length must be at least 1")]
    ZeroLength,
    #[error("model probability {0} outside 1..=2^32-2")]
    InvalidModel(u32),
    #[error("corrupt payload: {0}")]
    Corrupt(&'static str),
}

/// Probability of a one bit, quantized as `p1_q / (2^32 - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArithModel {
    p1_q: u32,
}

impl ArithModel {
    pub const MIN_P1: u32 = 1;
    pub const MAX_P1: u32 = u32::MAX - 1;

    pub fn new(p1_q: u32) -> Result<Self, CoderError> {
        if (Self::MIN_P1..=Self::MAX_P1).contains(&p1_q) {
            Ok(ArithModel { p1_q })
        } else {
            Err(CoderError::InvalidModel(p1_q))
        }
    }

    /// round(ones / len * (2^32 - 1)), clamped so both symbols stay codable.
    pub fn from_counts(ones: u64, len: u64) -> Result<Self, CoderError> {
        if len == 0 {
            return Err(CoderError::EmptyInput);
        }
        let ones = u128::from(ones.min(len));
        let len = u128::from(len);
        let q = (2 * ones * u128::from(SCALE) + len) / (2 * len);
        let q = q.clamp(u128::from(Self::MIN_P1), u128::from(Self::MAX_P1));
        Ok(ArithModel { p1_q: q as u32 })
    }

    pub fn from_bits(bits: &BitSlice<u64, Lsb0>) -> Result<Self, CoderError> {
        Self::from_counts(bits.count_ones() as u64, bits.len() as u64)
    }

    pub fn p1_q(self) -> u32 {
        self.p1_q
    }

    pub fn p1(self) -> f64 {
        f64::from(self.p1_q) / SCALE as f64
    }

    fn p0_q(self) -> u64 {
        SCALE - u64::from(self.p1_q)
    }

    #[inline]
    fn split(self, range: u32) -> u32 {
        let s = (u64::from(range) * self.p0_q() / SCALE) as u32;
        s.clamp(1, range - 1)
    }
}

pub struct Encoder {
    model: ArithModel,
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Encoder {
    pub fn new(model: ArithModel) -> Self {
        Encoder {
            model,
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let split = self.model.split(self.range);
        if bit {
            self.low += u64::from(split);
            self.range -= split;
        } else {
            self.range = split;
        }
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    pub fn push_bits(&mut self, bits: &BitSlice<u64, Lsb0>) {
        for bit in bits.iter().by_vals() {
            self.push(bit);
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            let mut pending = self.cache;
            loop {
                self.out.push(pending.wrapping_add(carry));
                pending = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

pub struct Decoder<'a> {
    model: ArithModel,
    code: u32,
    range: u32,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(data: &'a [u8], model: ArithModel) -> Result<Self, CoderError> {
        if data.len() < 5 {
            return Err(CoderError::Corrupt("payload shorter than coder preamble"));
        }
        if data[0] != 0 {
            return Err(CoderError::Corrupt("nonzero leading coder byte"));
        }
        let code = u32::from_be_bytes([data[1], data[2], data[3], data[4]]);
        Ok(Decoder {
            model,
            code,
            range: u32::MAX,
            data,
            pos: 5,
        })
    }

    #[inline]
    pub fn next_bit(&mut self) -> Result<bool, CoderError> {
        let split = self.model.split(self.range);
        let bit = if self.code < split {
            self.range = split;
            false
        } else {
            self.code -= split;
            self.range -= split;
            true
        };
        while self.range < TOP {
            let byte = *self.data.get(self.pos).ok_or(CoderError::Corrupt(
                "payload exhausted before all bits decoded",
            ))?;
            self.pos += 1;
            self.code = (self.code << 8) | u32::from(byte);
            self.range <<= 8;
        }
        Ok(bit)
    }

    /// Decodes `out.len()` bits into `out`.
    pub fn fill(&mut self, out: &mut BitSlice<u64, Lsb0>) -> Result<(), CoderError> {
        for mut slot in out.iter_mut() {
            *slot = self.next_bit()?;
        }
        Ok(())
    }

    /// Errors unless every input byte was consumed.
    pub fn finish(self) -> Result<(), CoderError> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(CoderError::Corrupt("trailing bytes after coded bits"))
        }
    }
}

pub fn encode(bits: &BitSlice<u64, Lsb0>, model: ArithModel) -> Vec<u8> {
    let mut enc = Encoder::new(model);
    enc.push_bits(bits);
    enc.finish()
}

pub fn decode(
    data: &[u8],
    model: ArithModel,
    bit_len: usize,
) -> Result<BitVec<u64, Lsb0>, CoderError> {
    if bit_len == 0 {
        return Err(CoderError::ZeroLength);
    }
    let mut dec = Decoder::new(data, model)?;
    let mut out = bitvec![u64, Lsb0; 0; bit_len];
    dec.fill(&mut out)?;
    dec.finish()?;
    Ok(out)
}
