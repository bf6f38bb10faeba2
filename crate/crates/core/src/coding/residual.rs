//! Transform-block residual syntax on top of the range coder.
//!
//! Per block:
//! 1. coded-block flag (context coded, one context per luma/chroma);
//! 2. if set, the forward-scan index of the last non-zero level as
//!    `2 * log2 N` bypass bits;
//! 3. walking from that index back down to DC: a significance bin (context
//!    coded by channel, size and frequency band), then for significant cells
//!    a bypass sign bin and `EG0(|level| - 1)` in bypass bins.

use crate::coding::predict::IntraMode;
use crate::coding::range_coder::{Context, RangeDecoder, RangeEncoder};
use crate::coding::scan::ScanOrder;
use crate::error::{Error, Result};
use crate::quant::LevelBlock;
use crate::transform::TbSize;

const BANDS: usize = 8;

#[derive(Clone, Debug)]
struct Contexts {
    cbf: [Context; 2],
    sig: [[[Context; BANDS]; 4]; 2],
}

impl Default for Contexts {
    fn default() -> Self {
        Self {
            cbf: [Context::default(); 2],
            sig: [[[Context::default(); BANDS]; 4]; 2],
        }
    }
}

impl Contexts {
    #[inline]
    fn sig(&mut self, luma: bool, size: TbSize, x: u8, y: u8) -> &mut Context {
        let n = size.n();
        let band = (x as usize + y as usize) * BANDS / (2 * n - 1);
        &mut self.sig[!luma as usize][size.index()][band]
    }
}

#[inline]
fn last_index_bits(size: TbSize) -> u32 {
    2 * size.log2()
}

/// Encoder state for one frame payload.
#[derive(Debug, Default)]
pub struct EntropyEncoder {
    rc: RangeEncoder,
    ctx: Contexts,
}

impl EntropyEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bins(&self) -> u64 {
        self.rc.bins()
    }

    pub fn encode_mode(&mut self, mode: IntraMode) {
        self.rc.encode_bits(mode.id() as u32, 2);
    }

    fn encode_exp_golomb(&mut self, v: u32) {
        let k = 31 - (v + 1).leading_zeros();
        self.rc.encode_bits(0, k);
        self.rc.encode_bits(v + 1, k + 1);
    }

    pub fn encode_tb(&mut self, levels: &LevelBlock, scan: &ScanOrder, luma: bool) {
        debug_assert_eq!(levels.size, scan.size);
        let last = (0..scan.len())
            .rev()
            .find(|&i| levels.levels[scan.raster_at_forward(i)] != 0);
        let Some(last) = last else {
            self.rc.encode(&mut self.ctx.cbf[!luma as usize], false);
            return;
        };
        self.rc.encode(&mut self.ctx.cbf[!luma as usize], true);
        self.rc.encode_bits(last as u32, last_index_bits(scan.size));
        let reverse_start = scan.len() - 1 - last;
        for &(x, y) in &scan.positions[reverse_start..] {
            let level = levels.at(x as usize, y as usize);
            let ctx = self.ctx.sig(luma, scan.size, x, y);
            self.rc.encode(ctx, level != 0);
            if level != 0 {
                self.rc.encode_bypass(level < 0);
                self.encode_exp_golomb(level.unsigned_abs() - 1);
            }
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.rc.finish()
    }
}

/// Decoder state for one frame payload.
#[derive(Debug)]
pub struct EntropyDecoder<'a> {
    rc: RangeDecoder<'a>,
    ctx: Contexts,
}

impl<'a> EntropyDecoder<'a> {
    pub fn new(payload: &'a [u8]) -> Result<Self> {
        Ok(Self {
            rc: RangeDecoder::new(payload)?,
            ctx: Contexts::default(),
        })
    }

    pub fn position(&self) -> usize {
        self.rc.position()
    }

    pub fn decode_mode(&mut self) -> Result<IntraMode> {
        let id = self.rc.decode_bits(2)?;
        IntraMode::from_id(id as u8).ok_or(Error::Malformed("intra mode id out of range"))
    }

    fn decode_exp_golomb(&mut self) -> Result<u32> {
        let mut k = 0;
        while !self.rc.decode_bypass()? {
            k += 1;
            if k > 16 {
                return Err(Error::Malformed("exp-Golomb prefix too long"));
            }
        }
        let rest = self.rc.decode_bits(k)?;
        Ok(((1 << k) | rest) - 1)
    }

    pub fn decode_tb(&mut self, scan: &ScanOrder, luma: bool) -> Result<LevelBlock> {
        let mut block = LevelBlock::zeros(scan.size);
        if !self.rc.decode(&mut self.ctx.cbf[!luma as usize])? {
            return Ok(block);
        }
        let last = self.rc.decode_bits(last_index_bits(scan.size))? as usize;
        if last >= scan.len() {
            return Err(Error::MalformedLastPosition(last));
        }
        let n = scan.size.n();
        let reverse_start = scan.len() - 1 - last;
        for (i, &(x, y)) in scan.positions[reverse_start..].iter().enumerate() {
            let ctx = self.ctx.sig(luma, scan.size, x, y);
            let significant = self.rc.decode(ctx)?;
            if i == 0 && !significant {
                return Err(Error::MalformedLastPosition(last));
            }
            if significant {
                let negative = self.rc.decode_bypass()?;
                let mag = self.decode_exp_golomb()? + 1;
                if mag > i16::MAX as u32 + 1 {
                    return Err(Error::Malformed("level magnitude out of range"));
                }
                let level = mag as i32;
                block.levels[y as usize * n + x as usize] = if negative { -level } else { level };
            }
        }
        Ok(block)
    }
}
