//! Container format: a fixed 32-byte header followed by length-prefixed
//! frame payloads. See `docs/bitstream.md` for the byte layout.

use crate::coding::codec::{CodecConfig, Quantiser};
use crate::coding::scan::ScanKind;
use crate::error::{Error, Result};
use crate::media_io::{ChromaFormat, SequenceFormat};
use crate::quant::{DeadzoneMode, Qp};
use crate::transform::TbSize;

pub const MAGIC: [u8; 4] = *b"PQLB";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub config: CodecConfig,
    pub frame_count: u32,
}

impl Header {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let c = &self.config;
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = c.format.bit_depth;
        out[6] = c.format.chroma_format.id();
        out[7] = c.tb_size.log2() as u8;
        out[8] = c.quantiser.id();
        out[9] = c.qp.value();
        out[10] = c.deadzone.id();
        out[11] = c.scan.id();
        out[12..16].copy_from_slice(&(c.format.width as u32).to_le_bytes());
        out[16..20].copy_from_slice(&(c.format.height as u32).to_le_bytes());
        out[20..24].copy_from_slice(&self.frame_count.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated);
        }
        let bad = |what: &str| Error::BadHeader(what.to_string());
        if bytes[0..4] != MAGIC {
            return Err(bad("magic"));
        }
        if bytes[4] != VERSION {
            return Err(Error::BadHeader(format!("unsupported version {}", bytes[4])));
        }
        if bytes[24..32].iter().any(|&b| b != 0) {
            return Err(bad("reserved bytes must be zero"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let chroma = ChromaFormat::from_id(bytes[6]).ok_or_else(|| bad("chroma format"))?;
        let format = SequenceFormat::new(u32_at(12) as usize, u32_at(16) as usize, bytes[5], chroma)
            .map_err(|e| Error::BadHeader(e.to_string()))?;
        let log2 = bytes[7] as usize;
        let tb_size = if (2..=5).contains(&log2) {
            TbSize::new(1 << log2)?
        } else {
            return Err(bad("transform size"));
        };
        let config = CodecConfig {
            format,
            tb_size,
            quantiser: Quantiser::from_id(bytes[8]).ok_or_else(|| bad("quantiser id"))?,
            qp: Qp::new(bytes[9] as i64).map_err(|e| Error::BadHeader(e.to_string()))?,
            deadzone: DeadzoneMode::from_id(bytes[10]).ok_or_else(|| bad("deadzone mode"))?,
            scan: ScanKind::from_id(bytes[11]).ok_or_else(|| bad("scan kind"))?,
        };
        Ok(Self {
            config,
            frame_count: u32_at(20),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitstream {
    pub config: CodecConfig,
    pub frames: Vec<Vec<u8>>,
}

impl Bitstream {
    pub fn header(&self) -> Header {
        Header {
            config: self.config,
            frame_count: self.frames.len() as u32,
        }
    }

    /// Byte offset of each frame's length prefix within the serialised stream.
    pub fn frame_offsets(&self) -> Vec<usize> {
        let mut at = HEADER_LEN;
        self.frames
            .iter()
            .map(|f| {
                let here = at;
                at += 4 + f.len();
                here
            })
            .collect()
    }

    pub fn payload_bytes(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.frames.len() * 4 + self.payload_bytes());
        out.extend_from_slice(&self.header().to_bytes());
        for f in &self.frames {
            out.extend_from_slice(&(f.len() as u32).to_le_bytes());
            out.extend_from_slice(f);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = Header::from_bytes(bytes)?;
        let mut rest = &bytes[HEADER_LEN..];
        let mut frames = Vec::with_capacity(header.frame_count.min(1 << 16) as usize);
        for _ in 0..header.frame_count {
            if rest.len() < 4 {
                return Err(Error::Truncated);
            }
            let len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
            rest = &rest[4..];
            if rest.len() < len {
                return Err(Error::Truncated);
            }
            frames.push(rest[..len].to_vec());
            rest = &rest[len..];
        }
        if !rest.is_empty() {
            return Err(Error::BadHeader(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self {
            config: header.config,
            frames,
        })
    }
}
