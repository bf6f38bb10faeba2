//! Raw planar YCbCr video: loading, storing and block access.
//!
//! Files are frame-sequential, each frame holding the Y, Cb and Cr planes in
//! that order. 8-bit samples take one byte; 10-bit samples are stored in
//! little-endian 16-bit containers.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChromaFormat {
    #[serde(rename = "420")]
    Yuv420,
    #[serde(rename = "422")]
    Yuv422,
    #[serde(rename = "444")]
    Yuv444,
}

impl ChromaFormat {
    pub const ALL: [ChromaFormat; 3] = [Self::Yuv420, Self::Yuv422, Self::Yuv444];

    /// Horizontal and vertical subsampling factors of each chroma plane.
    pub fn subsampling(self) -> (usize, usize) {
        match self {
            Self::Yuv420 => (2, 2),
            Self::Yuv422 => (2, 1),
            Self::Yuv444 => (1, 1),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Self::Yuv420 => 0,
            Self::Yuv422 => 1,
            Self::Yuv444 => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// Compact name used in file names and reports.
    pub fn id_str(self) -> &'static str {
        match self {
            Self::Yuv420 => "420",
            Self::Yuv422 => "422",
            Self::Yuv444 => "444",
        }
    }

    pub fn chroma_dims(self, width: usize, height: usize) -> (usize, usize) {
        let (sx, sy) = self.subsampling();
        (width / sx, height / sy)
    }
}

impl fmt::Display for ChromaFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Yuv420 => "4:2:0",
            Self::Yuv422 => "4:2:2",
            Self::Yuv444 => "4:4:4",
        })
    }
}

impl FromStr for ChromaFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "420" | "4:2:0" | "yuv420" => Ok(Self::Yuv420),
            "422" | "4:2:2" | "yuv422" => Ok(Self::Yuv422),
            "444" | "4:4:4" | "yuv444" => Ok(Self::Yuv444),
            other => Err(Error::UnsupportedChromaFormat(other.to_string())),
        }
    }
}

pub fn check_bit_depth(bit_depth: u8) -> Result<()> {
    match bit_depth {
        8 | 10 => Ok(()),
        other => Err(Error::UnsupportedBitDepth(other)),
    }
}

/// A single channel raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    bit_depth: u8,
    samples: Vec<u16>,
}

impl Plane {
    pub fn new(width: usize, height: usize, bit_depth: u8, samples: Vec<u16>) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        let max = (1u32 << bit_depth) - 1;
        if let Some(&bad) = samples.iter().find(|&&s| s as u32 > max) {
            return Err(Error::SampleRange {
                value: bad as u32,
                bit_depth,
            });
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, bit_depth: u8, value: u16) -> Result<Self> {
        Self::new(width, height, bit_depth, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn max_value(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    #[cfg(test)]
    pub(crate) fn samples_mut(&mut self) -> &mut [u16] {
        &mut self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }

    /// Sample lookup with edge replication outside the plane.
    #[inline]
    pub fn get_clamped(&self, x: usize, y: usize) -> u16 {
        self.get(x.min(self.width - 1), y.min(self.height - 1))
    }

    /// Dimensions of the block grid when tiling with `n`x`n` blocks.
    pub fn grid(&self, n: usize) -> (usize, usize) {
        (self.width.div_ceil(n), self.height.div_ceil(n))
    }

    fn check_origin(&self, x0: usize, y0: usize, n: usize) -> Result<()> {
        let (gw, gh) = self.grid(n);
        if !x0.is_multiple_of(n) || !y0.is_multiple_of(n) || x0 >= gw * n || y0 >= gh * n {
            return Err(Error::OutOfGrid {
                x0,
                y0,
                n,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Reads an `n`x`n` block at `(x0, y0)`, replicating the last valid
    /// column and row where the block overhangs the plane.
    pub fn extract_block(&self, x0: usize, y0: usize, n: usize) -> Result<Vec<i32>> {
        check_block_size(n)?;
        self.check_origin(x0, y0, n)?;
        let mut block = Vec::with_capacity(n * n);
        for y in y0..y0 + n {
            for x in x0..x0 + n {
                block.push(self.get_clamped(x, y) as i32);
            }
        }
        Ok(block)
    }

    /// Writes an `n`x`n` block back, cropping whatever falls outside the
    /// plane. Values are clipped to the sample range.
    pub fn place_block(&mut self, x0: usize, y0: usize, n: usize, block: &[i32]) -> Result<()> {
        check_block_size(n)?;
        self.check_origin(x0, y0, n)?;
        if block.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {n}x{n} block",
                block.len()
            )));
        }
        let max = self.max_value() as i32;
        let x_end = (x0 + n).min(self.width);
        let y_end = (y0 + n).min(self.height);
        for y in y0..y_end {
            for x in x0..x_end {
                let v = block[(y - y0) * n + (x - x0)].clamp(0, max);
                self.samples[y * self.width + x] = v as u16;
            }
        }
        Ok(())
    }
}

fn check_block_size(n: usize) -> Result<()> {
    match n {
        4 | 8 | 16 | 32 => Ok(()),
        other => Err(Error::UnsupportedBlockSize(other)),
    }
}

/// Free-function form of [`Plane::extract_block`].
pub fn extract_block(plane: &Plane, x0: usize, y0: usize, n: usize) -> Result<Vec<i32>> {
    plane.extract_block(x0, y0, n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
}

impl Frame {
    pub fn planes(&self) -> [&Plane; 3] {
        [&self.y, &self.cb, &self.cr]
    }
}

/// Geometry shared by every frame of a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFormat {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma_format: ChromaFormat,
}

impl SequenceFormat {
    pub fn new(width: usize, height: usize, bit_depth: u8, chroma_format: ChromaFormat) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        let (sx, sy) = chroma_format.subsampling();
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "zero-sized",
            });
        }
        if !width.is_multiple_of(sx) || !height.is_multiple_of(sy) {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "luma dimensions must be divisible by the chroma subsampling",
            });
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            chroma_format,
        })
    }

    pub fn chroma_dims(&self) -> (usize, usize) {
        self.chroma_format.chroma_dims(self.width, self.height)
    }

    fn bytes_per_sample(&self) -> usize {
        if self.bit_depth > 8 {
            2
        } else {
            1
        }
    }

    pub fn samples_per_frame(&self) -> usize {
        let (cw, ch) = self.chroma_dims();
        self.width * self.height + 2 * cw * ch
    }

    pub fn frame_bytes(&self) -> usize {
        self.samples_per_frame() * self.bytes_per_sample()
    }

    pub fn plane_dims(&self, channel: usize) -> (usize, usize) {
        if channel == 0 {
            (self.width, self.height)
        } else {
            self.chroma_dims()
        }
    }

    /// Checks that a frame matches this geometry.
    pub fn check_frame(&self, frame: &Frame) -> Result<()> {
        for (c, plane) in frame.planes().into_iter().enumerate() {
            let (w, h) = self.plane_dims(c);
            if plane.width() != w || plane.height() != h || plane.bit_depth() != self.bit_depth {
                return Err(Error::DimensionMismatch(format!(
                    "plane {c} is {}x{} at {} bits, expected {w}x{h} at {} bits",
                    plane.width(),
                    plane.height(),
                    plane.bit_depth(),
                    self.bit_depth
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSequence {
    pub format: SequenceFormat,
    pub frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(format: SequenceFormat, frames: Vec<Frame>) -> Result<Self> {
        for frame in &frames {
            format.check_frame(frame)?;
        }
        Ok(Self { format, frames })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn from_bytes(format: SequenceFormat, bytes: &[u8]) -> Result<Self> {
        let frame_bytes = format.frame_bytes();
        if !bytes.len().is_multiple_of(frame_bytes) {
            return Err(Error::SizeMismatch {
                file_size: bytes.len() as u64,
                frame_size: frame_bytes as u64,
            });
        }
        let wide = format.bytes_per_sample() == 2;
        let frames = bytes
            .chunks_exact(frame_bytes)
            .map(|chunk| {
                let mut cursor = chunk;
                let mut next_plane = |c: usize| -> Result<Plane> {
                    let (w, h) = format.plane_dims(c);
                    let len = w * h * format.bytes_per_sample();
                    let (head, tail) = cursor.split_at(len);
                    cursor = tail;
                    let samples = if wide {
                        head.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect()
                    } else {
                        head.iter().map(|&b| b as u16).collect()
                    };
                    Plane::new(w, h, format.bit_depth, samples)
                };
                Ok(Frame {
                    y: next_plane(0)?,
                    cb: next_plane(1)?,
                    cr: next_plane(2)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { format, frames })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.format.frame_bytes() * self.frames.len());
        let wide = self.format.bytes_per_sample() == 2;
        for frame in &self.frames {
            for plane in frame.planes() {
                if wide {
                    out.extend(plane.samples().iter().flat_map(|s| s.to_le_bytes()));
                } else {
                    out.extend(plane.samples().iter().map(|&s| s as u8));
                }
            }
        }
        out
    }
}

pub fn load_raw(path: impl AsRef<Path>, format: SequenceFormat) -> Result<FrameSequence> {
    let bytes = fs::read(path)?;
    FrameSequence::from_bytes(format, &bytes)
}

pub fn write_raw(sequence: &FrameSequence, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, sequence.to_bytes())?;
    Ok(())
}
