//! Binary range coder with adaptive 12-bit probabilities.
//!
//! The carry handling follows the classic LZMA layout: `low` is kept in 33
//! bits and a run of pending `0xFF` bytes is resolved when the carry is
//! known. Bypass bins halve the range and need no model.

use crate::error::{Error, Result};

const PROB_BITS: u32 = 12;
const PROB_ONE: u16 = 1 << PROB_BITS;
const ADAPT_SHIFT: u32 = 5;
const TOP: u32 = 1 << 24;

/// Probability that the next bin is 0, in units of 2^-12.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Context {
    p0: u16,
}

impl Default for Context {
    fn default() -> Self {
        Self { p0: PROB_ONE / 2 }
    }
}

impl Context {
    #[inline]
    pub fn p0(&self) -> u16 {
        self.p0
    }

    #[inline]
    fn update(&mut self, bit: bool) {
        if bit {
            self.p0 -= self.p0 >> ADAPT_SHIFT;
        } else {
            self.p0 += (PROB_ONE - self.p0) >> ADAPT_SHIFT;
        }
    }
}

#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
    bins: u64,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
            bins: 0,
        }
    }

    /// Number of bins coded so far, context-coded and bypass alike.
    pub fn bins(&self) -> u64 {
        self.bins
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    #[inline]
    fn normalize(&mut self) {
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    pub fn encode(&mut self, ctx: &mut Context, bit: bool) {
        let bound = (self.range >> PROB_BITS) * ctx.p0 as u32;
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        ctx.update(bit);
        self.bins += 1;
        self.normalize();
    }

    pub fn encode_bypass(&mut self, bit: bool) {
        self.range >>= 1;
        if bit {
            self.low += self.range as u64;
        }
        self.bins += 1;
        self.normalize();
    }

    /// Writes `value` as `width` bypass bins, most significant first.
    pub fn encode_bits(&mut self, value: u32, width: u32) {
        for i in (0..width).rev() {
            self.encode_bypass((value >> i) & 1 == 1);
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    input: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let mut dec = Self {
            input,
            pos: 0,
            range: u32::MAX,
            code: 0,
        };
        if dec.next_byte()? != 0 {
            return Err(Error::Malformed("range coder stream must start with a zero byte"));
        }
        for _ in 0..4 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.input.get(self.pos).ok_or(Error::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    /// Bytes consumed so far.
    pub fn position(&self) -> usize {
        self.pos
    }

    #[inline]
    fn normalize(&mut self) -> Result<()> {
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(())
    }

    pub fn decode(&mut self, ctx: &mut Context) -> Result<bool> {
        let bound = (self.range >> PROB_BITS) * ctx.p0 as u32;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        ctx.update(bit);
        self.normalize()?;
        Ok(bit)
    }

    pub fn decode_bypass(&mut self) -> Result<bool> {
        self.range >>= 1;
        let bit = if self.code >= self.range {
            self.code -= self.range;
            true
        } else {
            false
        };
        self.normalize()?;
        Ok(bit)
    }

    pub fn decode_bits(&mut self, width: u32) -> Result<u32> {
        let mut v = 0;
        for _ in 0..width {
            v = (v << 1) | self.decode_bypass()? as u32;
        }
        Ok(v)
    }
}
