//! Objective quality metrics: PSNR and SSIM per channel.

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::media_io::{Frame, FrameSequence, Plane};

/// SSIM window side length.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// One-line description of the SSIM setup, recorded alongside reports.
pub fn ssim_config() -> String {
    format!(
        "gaussian {SSIM_WINDOW}x{SSIM_WINDOW} sigma={SSIM_SIGMA} K1={SSIM_K1} K2={SSIM_K2} L=2^B-1 valid-window mean"
    )
}

fn check_same(a: &Plane, b: &Plane) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() || a.bit_depth() != b.bit_depth() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} {}-bit vs {}x{} {}-bit",
            a.width(),
            a.height(),
            a.bit_depth(),
            b.width(),
            b.height(),
            b.bit_depth()
        )));
    }
    Ok(())
}

pub fn mse(reference: &Plane, test: &Plane) -> Result<f64> {
    check_same(reference, test)?;
    let sum: f64 = reference
        .samples()
        .iter()
        .zip(test.samples())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / reference.samples().len() as f64)
}

/// PSNR in dB; identical planes give `f64::INFINITY`.
pub fn psnr(reference: &Plane, test: &Plane) -> Result<f64> {
    let mse = mse(reference, test)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let max = reference.max_value() as f64;
    Ok(10.0 * (max * max / mse).log10())
}

fn gaussian_kernel() -> &'static [f64; SSIM_WINDOW] {
    static KERNEL: OnceLock<[f64; SSIM_WINDOW]> = OnceLock::new();
    KERNEL.get_or_init(|| {
        let half = (SSIM_WINDOW / 2) as f64;
        let mut k: [f64; SSIM_WINDOW] =
            std::array::from_fn(|i| (-((i as f64 - half).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
        let total: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= total);
        k
    })
}

/// Per-pixel SSIM values over the valid window positions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SsimMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SsimMap {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// 8-bit binary PGM, mapping SSIM 0..1 to black..white (negatives clip to black).
    pub fn write_pgm(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_pgm(&mut file)?;
        file.flush()?;
        Ok(())
    }
}

/// Gaussian-weighted local means of the valid window positions, filtered
/// separably (rows first).
fn filter_valid(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let k = gaussian_kernel();
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        let line = &src[y * width..(y + 1) * width];
        for x in 0..ow {
            rows[y * ow + x] = k.iter().zip(&line[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k.iter().enumerate().map(|(i, w)| w * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

pub fn ssim_map(reference: &Plane, test: &Plane) -> Result<SsimMap> {
    check_same(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::PlaneTooSmall {
            width: w,
            height: h,
            window: SSIM_WINDOW,
        });
    }
    let a: Vec<f64> = reference.samples().iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = test.samples().iter().map(|&v| v as f64).collect();
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();

    let mu_a = filter_valid(&a, w, h);
    let mu_b = filter_valid(&b, w, h);
    let e_aa = filter_valid(&aa, w, h);
    let e_bb = filter_valid(&bb, w, h);
    let e_ab = filter_valid(&ab, w, h);

    let l = reference.max_value() as f64;
    let c1 = (SSIM_K1 * l).powi(2);
    let c2 = (SSIM_K2 * l).powi(2);
    let values = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect();
    Ok(SsimMap {
        width: w - SSIM_WINDOW + 1,
        height: h - SSIM_WINDOW + 1,
        values,
    })
}

pub fn ssim(reference: &Plane, test: &Plane) -> Result<f64> {
    Ok(ssim_map(reference, test)?.mean())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ChannelQuality {
    pub psnr_db: f64,
    pub ssim: f64,
}

/// Quality of one frame or the per-frame mean over a sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct QualityRecord {
    pub y: ChannelQuality,
    pub cb: ChannelQuality,
    pub cr: ChannelQuality,
}

impl QualityRecord {
    pub fn channels(&self) -> [ChannelQuality; 3] {
        [self.y, self.cb, self.cr]
    }

    /// Unweighted mean PSNR of Y, Cb and Cr.
    pub fn combined_psnr(&self) -> f64 {
        self.channels().iter().map(|c| c.psnr_db).sum::<f64>() / 3.0
    }

    pub fn combined_ssim(&self) -> f64 {
        self.channels().iter().map(|c| c.ssim).sum::<f64>() / 3.0
    }
}

fn channel_quality(reference: &Plane, test: &Plane) -> Result<ChannelQuality> {
    Ok(ChannelQuality {
        psnr_db: psnr(reference, test)?,
        ssim: ssim(reference, test)?,
    })
}

pub fn frame_quality(reference: &Frame, test: &Frame) -> Result<QualityRecord> {
    Ok(QualityRecord {
        y: channel_quality(&reference.y, &test.y)?,
        cb: channel_quality(&reference.cb, &test.cb)?,
        cr: channel_quality(&reference.cr, &test.cr)?,
    })
}

/// Metrics per frame, then averaged over frames.
pub fn sequence_quality(reference: &FrameSequence, test: &FrameSequence) -> Result<QualityRecord> {
    if reference.frame_count() != test.frame_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} frames vs {} frames",
            reference.frame_count(),
            test.frame_count()
        )));
    }
    if reference.frame_count() == 0 {
        return Err(Error::DimensionMismatch("no frames to compare".into()));
    }
    let per_frame = reference
        .frames
        .iter()
        .zip(&test.frames)
        .map(|(a, b)| frame_quality(a, b))
        .collect::<Result<Vec<_>>>()?;
    let n = per_frame.len() as f64;
    let mean = |f: &dyn Fn(&QualityRecord) -> ChannelQuality| ChannelQuality {
        psnr_db: per_frame.iter().map(|r| f(r).psnr_db).sum::<f64>() / n,
        ssim: per_frame.iter().map(|r| f(r).ssim).sum::<f64>() / n,
    };
    Ok(QualityRecord {
        y: mean(&|r| r.y),
        cb: mean(&|r| r.cb),
        cr: mean(&|r| r.cr),
    })
}
