//! Intra-only frame codec.
//!
//! Each channel is tiled with a fixed block size and coded in raster order:
//! intra mode (2 bypass bits), forward transform, the selected quantiser,
//! scan and residual syntax. The encoder reconstructs in-loop with the
//! matching dequantiser so that later predictions only ever see decoded
//! samples; the decoder runs the same reconstruction and must agree with it
//! bit-exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coding::bitstream::Bitstream;
use crate::coding::predict::{choose_mode, predict, ReconBuffer};
use crate::coding::residual::{EntropyDecoder, EntropyEncoder};
use crate::coding::scan::{scan_order, ScanKind};
use crate::error::{Error, Result};
use crate::fdpq::{fdpq_dequantise, fdpq_quantise};
use crate::media_io::{Frame, FrameSequence, Plane, SequenceFormat};
use crate::quant::{urq_dequantise, urq_quantise, DeadzoneMode, LevelBlock, Qp, QuantConfig};
use crate::rdoq::{rdoq_quantise, RdoqParams};
use crate::transform::{forward_transform, inverse_transform, BlockClass, Channel, CoeffBlock, TbSize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantiser {
    Urq,
    Rdoq,
    Fdpq,
}

impl Quantiser {
    pub const ALL: [Quantiser; 3] = [Self::Urq, Self::Rdoq, Self::Fdpq];

    pub fn id(self) -> u8 {
        match self {
            Self::Urq => 0,
            Self::Rdoq => 1,
            Self::Fdpq => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Urq => "urq",
            Self::Rdoq => "rdoq",
            Self::Fdpq => "fdpq",
        }
    }

    pub fn quantise(self, coeffs: &CoeffBlock, cfg: &QuantConfig) -> Result<LevelBlock> {
        match self {
            Self::Urq => urq_quantise(coeffs, cfg),
            Self::Rdoq => rdoq_quantise(coeffs, cfg, &RdoqParams::from_schedule(cfg)),
            Self::Fdpq => fdpq_quantise(coeffs, cfg),
        }
    }

    /// RDOQ only changes level decisions, so it shares URQ's dequantiser.
    pub fn dequantise(self, levels: &LevelBlock, cfg: &QuantConfig) -> Result<Vec<i32>> {
        match self {
            Self::Urq | Self::Rdoq => urq_dequantise(levels, cfg),
            Self::Fdpq => fdpq_dequantise(levels, cfg),
        }
    }
}

impl fmt::Display for Quantiser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantiser {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "urq" => Ok(Self::Urq),
            "rdoq" => Ok(Self::Rdoq),
            "fdpq" => Ok(Self::Fdpq),
            other => Err(Error::Config(format!("unknown quantiser `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodecConfig {
    pub format: SequenceFormat,
    /// Luma block size; chroma uses it divided by the horizontal subsampling.
    pub tb_size: TbSize,
    pub quantiser: Quantiser,
    pub qp: Qp,
    pub deadzone: DeadzoneMode,
    pub scan: ScanKind,
}

impl CodecConfig {
    pub fn block_size(&self, channel: Channel) -> TbSize {
        if channel.is_luma() {
            return self.tb_size;
        }
        let (sx, _) = self.format.chroma_format.subsampling();
        TbSize::new((self.tb_size.n() / sx).max(4)).expect("power of two in range")
    }

    fn quant_config(&self, size: TbSize) -> QuantConfig {
        QuantConfig::new(self.qp, size, self.format.bit_depth, self.deadzone)
    }
}

/// Prediction plus dequantised, inverse-transformed residual, clipped to the
/// sample range. Shared verbatim by encoder and decoder.
fn reconstruct(pred: &[i32], levels: &LevelBlock, class: BlockClass, cfg: &CodecConfig) -> Result<Vec<i32>> {
    let max = (1i32 << cfg.format.bit_depth) - 1;
    if levels.is_zero() {
        return Ok(pred.to_vec());
    }
    let qcfg = cfg.quant_config(class.size);
    let coeffs = CoeffBlock::new(class, cfg.quantiser.dequantise(levels, &qcfg)?)?;
    let residual = inverse_transform(&coeffs, cfg.format.bit_depth)?;
    Ok(pred
        .iter()
        .zip(&residual)
        .map(|(&p, &r)| (p + r).clamp(0, max))
        .collect())
}

fn crop(buffer: &ReconBuffer, width: usize, height: usize, bit_depth: u8) -> Result<Plane> {
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        samples.extend(
            buffer.data[y * buffer.width..y * buffer.width + width]
                .iter()
                .map(|&v| v as u16),
        );
    }
    Plane::new(width, height, bit_depth, samples)
}

fn encode_plane(plane: &Plane, channel: Channel, cfg: &CodecConfig, enc: &mut EntropyEncoder) -> Result<Plane> {
    let size = cfg.block_size(channel);
    let n = size.n();
    let class = BlockClass::new(channel, size);
    let qcfg = cfg.quant_config(size);
    let scan = scan_order(cfg.scan, size);
    let bit_depth = cfg.format.bit_depth;
    let (gw, gh) = plane.grid(n);
    let mut recon = ReconBuffer::new(gw * n, gh * n);
    for by in 0..gh {
        for bx in 0..gw {
            let (x0, y0) = (bx * n, by * n);
            let original = plane.extract_block(x0, y0, n)?;
            let nb = recon.neighbours(x0, y0, n);
            let (mode, pred) = choose_mode(&original, &nb, n, bit_depth);
            let residual: Vec<i32> = original.iter().zip(&pred).map(|(&o, &p)| o - p).collect();
            let coeffs = forward_transform(&residual, class, bit_depth)?;
            let levels = cfg.quantiser.quantise(&coeffs, &qcfg)?;
            enc.encode_mode(mode);
            enc.encode_tb(&levels, scan, channel.is_luma());
            recon.write_block(x0, y0, n, &reconstruct(&pred, &levels, class, cfg)?);
        }
    }
    crop(&recon, plane.width(), plane.height(), bit_depth)
}

fn decode_plane(
    width: usize,
    height: usize,
    channel: Channel,
    cfg: &CodecConfig,
    dec: &mut EntropyDecoder<'_>,
) -> Result<Plane> {
    let size = cfg.block_size(channel);
    let n = size.n();
    let class = BlockClass::new(channel, size);
    let scan = scan_order(cfg.scan, size);
    let bit_depth = cfg.format.bit_depth;
    let (gw, gh) = (width.div_ceil(n), height.div_ceil(n));
    let mut recon = ReconBuffer::new(gw * n, gh * n);
    for by in 0..gh {
        for bx in 0..gw {
            let (x0, y0) = (bx * n, by * n);
            let nb = recon.neighbours(x0, y0, n);
            let mode = dec.decode_mode()?;
            if !nb.allowed_modes().contains(&mode) {
                return Err(Error::Malformed("intra mode not allowed at this block"));
            }
            let pred = predict(mode, &nb, n, bit_depth);
            let levels = dec.decode_tb(scan, channel.is_luma())?;
            recon.write_block(x0, y0, n, &reconstruct(&pred, &levels, class, cfg)?);
        }
    }
    crop(&recon, width, height, bit_depth)
}

/// Codes one frame, returning its payload and the in-loop reconstruction.
pub fn encode_frame(frame: &Frame, cfg: &CodecConfig) -> Result<(Vec<u8>, Frame)> {
    cfg.format.check_frame(frame)?;
    let mut enc = EntropyEncoder::new();
    let y = encode_plane(&frame.y, Channel::Luma, cfg, &mut enc)?;
    let cb = encode_plane(&frame.cb, Channel::Cb, cfg, &mut enc)?;
    let cr = encode_plane(&frame.cr, Channel::Cr, cfg, &mut enc)?;
    Ok((enc.finish(), Frame { y, cb, cr }))
}

pub fn decode_frame(payload: &[u8], cfg: &CodecConfig) -> Result<Frame> {
    let mut dec = EntropyDecoder::new(payload)?;
    let (w, h) = (cfg.format.width, cfg.format.height);
    let (cw, ch) = cfg.format.chroma_dims();
    let y = decode_plane(w, h, Channel::Luma, cfg, &mut dec)?;
    let cb = decode_plane(cw, ch, Channel::Cb, cfg, &mut dec)?;
    let cr = decode_plane(cw, ch, Channel::Cr, cfg, &mut dec)?;
    if dec.position() != payload.len() {
        return Err(Error::Malformed("frame payload has unread bytes"));
    }
    Ok(Frame { y, cb, cr })
}

#[derive(Clone, Debug)]
pub struct Encoded {
    pub bitstream: Bitstream,
    /// Encoder-side reconstruction.
    pub recon: FrameSequence,
}

pub fn encode_sequence(seq: &FrameSequence, cfg: &CodecConfig) -> Result<Encoded> {
    if seq.format != cfg.format {
        return Err(Error::Config(format!(
            "sequence format {:?} does not match codec format {:?}",
            seq.format, cfg.format
        )));
    }
    let mut frames = Vec::with_capacity(seq.frame_count());
    let mut recon = Vec::with_capacity(seq.frame_count());
    for frame in &seq.frames {
        let (payload, rec) = encode_frame(frame, cfg)?;
        frames.push(payload);
        recon.push(rec);
    }
    Ok(Encoded {
        bitstream: Bitstream { config: *cfg, frames },
        recon: FrameSequence::new(cfg.format, recon)?,
    })
}

pub fn decode_sequence(bitstream: &Bitstream) -> Result<FrameSequence> {
    let frames = bitstream
        .frames
        .iter()
        .map(|payload| decode_frame(payload, &bitstream.config))
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(bitstream.config.format, frames)
}
