//! Deterministic synthetic test clips.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media_io::{Frame, FrameSequence, Plane, SequenceFormat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Smooth diagonal ramps drifting over time.
    Gradient,
    /// Low-pass filtered white noise.
    Noise,
    /// High-variance, high-frequency texture.
    Texture,
    /// A sharp diagonal edge sliding across a ramp.
    MovingEdge,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [Self::Gradient, Self::Noise, Self::Texture, Self::MovingEdge];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gradient => "gradient",
            Self::Noise => "noise",
            Self::Texture => "texture",
            Self::MovingEdge => "moving-edge",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Self::Gradient => 0x11,
            Self::Noise => 0x22,
            Self::Texture => 0x33,
            Self::MovingEdge => 0x44,
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthetic clip `{s}`")))
    }
}

/// Values are produced on an 8-bit scale and stretched to the plane's depth.
struct Painter<'a> {
    kind: SyntheticKind,
    rng: &'a mut ChaCha8Rng,
    t: usize,
    /// Chroma planes get a different phase and lower amplitude.
    chroma: Option<usize>,
    /// Subsampling, so chroma patterns line up with luma.
    sx: usize,
    sy: usize,
    full_w: usize,
    full_h: usize,
}

impl Painter<'_> {
    fn paint(&mut self, w: usize, h: usize) -> Vec<f64> {
        let (fw, fh) = (self.full_w as f64, self.full_h as f64);
        let t = self.t as f64;
        let amp = if self.chroma.is_some() { 0.4 } else { 1.0 };
        let phase = self.chroma.map_or(0.0, |c| 1.3 + c as f64);
        let coords = |x: usize, y: usize| ((x * self.sx) as f64, (y * self.sy) as f64);
        match self.kind {
            SyntheticKind::Gradient => (0..w * h)
                .map(|i| {
                    let (x, y) = coords(i % w, i / w);
                    let ramp = 0.6 * x / fw + 0.4 * y / fh + 0.02 * t;
                    128.0 + amp * 110.0 * (ramp - 0.5 + 0.1 * phase.sin()) * 2.0
                })
                .collect(),
            SyntheticKind::Noise => {
                let white: Vec<f64> = (0..w * h).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
                let mut smooth = box_blur(&white, w, h, 2);
                smooth = box_blur(&smooth, w, h, 2);
                let rms = (smooth.iter().map(|v| v * v).sum::<f64>() / smooth.len() as f64)
                    .sqrt()
                    .max(1e-9);
                smooth.iter().map(|v| 128.0 + amp * 40.0 * v / rms).collect()
            }
            SyntheticKind::Texture => (0..w * h)
                .map(|i| {
                    let (x, y) = coords(i % w, i / w);
                    let a = (0.9 * x + 0.3 * y + phase).sin() * (0.7 * y - 0.2 * x + 0.5 * t).cos();
                    let b = ((x + y + t) * PI / 3.0).sin();
                    let noise: f64 = self.rng.gen_range(-1.0..1.0);
                    128.0 + amp * (70.0 * a + 25.0 * b + 30.0 * noise)
                })
                .collect(),
            SyntheticKind::MovingEdge => (0..w * h)
                .map(|i| {
                    let (x, y) = coords(i % w, i / w);
                    let edge = fw / 3.0 + 5.0 * t + 0.25 * y;
                    let base = 20.0 * x / fw;
                    let level = if x >= edge { 190.0 } else { 60.0 };
                    128.0 + amp * (level + base - 128.0) + 8.0 * phase.cos()
                })
                .collect(),
        }
    }
}

fn box_blur(src: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let at = |v: &[f64], x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        v[y * w + x]
    };
    let r = r as isize;
    let taps = (2 * r + 1) as f64;
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            rows[y * w + x] = (-r..=r).map(|d| at(src, x as isize + d, y as isize)).sum::<f64>() / taps;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (-r..=r).map(|d| at(&rows, x as isize, y as isize + d)).sum::<f64>() / taps;
        }
    }
    out
}

fn quantise_plane(values: Vec<f64>, w: usize, h: usize, bit_depth: u8) -> Result<Plane> {
    let scale = (1u32 << (bit_depth - 8)) as f64;
    let max = ((1u32 << bit_depth) - 1) as f64;
    let samples = values
        .into_iter()
        .map(|v| (v * scale).round().clamp(0.0, max) as u16)
        .collect();
    Plane::new(w, h, bit_depth, samples)
}

/// Generates `frames` frames of `kind`; the same arguments always give the
/// same samples.
pub fn generate(kind: SyntheticKind, format: SequenceFormat, frames: usize, seed: u64) -> Result<FrameSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind.salt() << 56));
    let (sx, sy) = format.chroma_format.subsampling();
    let (cw, ch) = format.chroma_dims();
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let mut planes = Vec::with_capacity(3);
        for (chroma, (w, h, sx, sy)) in [
            (None, (format.width, format.height, 1, 1)),
            (Some(0), (cw, ch, sx, sy)),
            (Some(1), (cw, ch, sx, sy)),
        ] {
            let mut painter = Painter {
                kind,
                rng: &mut rng,
                t,
                chroma,
                sx,
                sy,
                full_w: format.width,
                full_h: format.height,
            };
            let values = painter.paint(w, h);
            planes.push(quantise_plane(values, w, h, format.bit_depth)?);
        }
        let cr = planes.pop().expect("three planes");
        let cb = planes.pop().expect("three planes");
        let y = planes.pop().expect("three planes");
        out.push(Frame { y, cb, cr });
    }
    FrameSequence::new(format, out)
}
