//! QP/QStep mapping and uniform reconstruction quantisation (URQ).
//!
//! Quantisation replaces division by the step size with an integer
//! multiplication factor (MF) and a right shift; dequantisation uses the
//! matching scaling factor (SF). `MF * SF ~= 2^20` for every `QP mod 6`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{CoeffBlock, TbSize};

pub const MF: [i32; 6] = [26214, 23302, 20560, 18396, 16384, 14564];
pub const SF: [i32; 6] = [40, 45, 51, 57, 64, 72];

pub const QP_MAX: u8 = 51;

/// Quantisation parameter in `[0, 51]`, shared by luma and both chroma
/// channels (no chroma QP offsets).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct Qp(u8);

impl Qp {
    pub fn new(value: i64) -> Result<Self> {
        if (0..=QP_MAX as i64).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(Error::InvalidQp(value))
        }
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn per(self) -> u32 {
        (self.0 / 6) as u32
    }

    #[inline]
    pub fn rem(self) -> usize {
        (self.0 % 6) as usize
    }

    pub fn all() -> impl Iterator<Item = Qp> {
        (0..=QP_MAX).map(Qp)
    }
}

impl TryFrom<i64> for Qp {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Qp> for u8 {
    fn from(qp: Qp) -> u8 {
        qp.0
    }
}

impl fmt::Display for Qp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn qstep_from_qp(qp: Qp) -> f64 {
    2f64.powf((qp.0 as f64 - 4.0) / 6.0)
}

/// Slack applied before the ceiling so that step sizes printed to four
/// decimals still land on their own QP.
const QSTEP_CEIL_SLACK: f64 = 1e-3;

/// Smallest QP whose step is not below `qstep`, clamped to `[0, 51]`.
pub fn qp_from_qstep(qstep: f64) -> Result<Qp> {
    if !(qstep > 0.0 && qstep.is_finite()) {
        return Err(Error::InvalidQstep(qstep));
    }
    let qp = (6.0 * qstep.log2() - QSTEP_CEIL_SLACK).ceil() + 4.0;
    Ok(Qp(qp.clamp(0.0, QP_MAX as f64) as u8))
}

pub fn mf_sf(qp: Qp) -> (i32, i32) {
    (MF[qp.rem()], SF[qp.rem()])
}

/// Unrounded `2^14 / QStep` for the table row `QP mod 6`.
pub fn mf_closed_form(qp: Qp) -> f64 {
    16384.0 / qstep_from_qp(Qp(qp.0 % 6))
}

/// Unrounded `2^6 * QStep` for the table row `QP mod 6`.
pub fn sf_closed_form(qp: Qp) -> f64 {
    64.0 * qstep_from_qp(Qp(qp.0 % 6))
}

/// Rounding offset policy for forward quantisation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeadzoneMode {
    /// Offset of one third of the quantisation step.
    IntraThird,
    /// Offset of half a step (round to nearest); `o = 2^18` at `qbits = 19`.
    #[default]
    Half,
}

impl DeadzoneMode {
    pub fn id(self) -> u8 {
        match self {
            Self::IntraThird => 0,
            Self::Half => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Self::IntraThird),
            1 => Some(Self::Half),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::IntraThird => "intra-third",
            Self::Half => "half",
        }
    }
}

impl fmt::Display for DeadzoneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeadzoneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intra-third" | "intra_third" | "third" => Ok(Self::IntraThird),
            "half" => Ok(Self::Half),
            other => Err(Error::Config(format!("unknown deadzone mode `{other}`"))),
        }
    }
}

/// Everything needed to quantise one transform block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantConfig {
    pub qp: Qp,
    pub size: TbSize,
    pub bit_depth: u8,
    pub deadzone: DeadzoneMode,
}

impl QuantConfig {
    pub fn new(qp: Qp, size: TbSize, bit_depth: u8, deadzone: DeadzoneMode) -> Self {
        Self {
            qp,
            size,
            bit_depth,
            deadzone,
        }
    }

    /// Right shift of the forward scaler; `21 + QP/6 - log2 N` at 8 bits.
    #[inline]
    pub fn qbits(&self) -> u32 {
        14 + self.qp.per() + 15 - self.bit_depth as u32 - self.size.log2()
    }

    #[inline]
    pub fn offset(&self) -> i64 {
        let full = 1i64 << self.qbits();
        match self.deadzone {
            DeadzoneMode::IntraThird => full / 3,
            DeadzoneMode::Half => full / 2,
        }
    }

    /// Right shift of the inverse scaler; `log2 N - 1` at 8 bits.
    #[inline]
    pub fn dequant_shift(&self) -> u32 {
        self.size.log2() - 1 + self.bit_depth as u32 - 8
    }

    pub fn qstep(&self) -> f64 {
        qstep_from_qp(self.qp)
    }

    pub fn mf(&self) -> i32 {
        MF[self.qp.rem()]
    }

    pub fn sf(&self) -> i32 {
        SF[self.qp.rem()]
    }

    /// Ratio between coefficient-domain and orthonormal (pixel-domain)
    /// amplitudes produced by the forward transform.
    pub fn transform_gain(&self) -> f64 {
        2f64.powi(15 - self.bit_depth as i32 - self.size.log2() as i32)
    }

    fn check(&self, size: TbSize) -> Result<()> {
        if size != self.size {
            return Err(Error::DimensionMismatch(format!(
                "block is {size}x{size} but the quantiser is configured for {}x{}",
                self.size, self.size
            )));
        }
        Ok(())
    }
}

/// Quantised levels of one transform block, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelBlock {
    pub size: TbSize,
    pub levels: Vec<i32>,
}

impl LevelBlock {
    pub fn new(size: TbSize, levels: Vec<i32>) -> Result<Self> {
        if levels.len() != size.area() {
            return Err(Error::DimensionMismatch(format!(
                "{} levels for a {size}x{size} block",
                levels.len()
            )));
        }
        Ok(Self { size, levels })
    }

    pub fn zeros(size: TbSize) -> Self {
        Self {
            size,
            levels: vec![0; size.area()],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> i32 {
        self.levels[y * self.size.n() + x]
    }

    pub fn nonzero_count(&self) -> usize {
        self.levels.iter().filter(|&&l| l != 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&l| l == 0)
    }
}

#[inline]
fn clip_level(v: i64) -> i32 {
    v.clamp(i16::MIN as i64, i16::MAX as i64) as i32
}

/// `sign(c) * ((|c| * mf + offset) >> qbits)`.
#[inline]
pub(crate) fn scale_level(c: i32, mf: i64, offset: i64, qbits: u32) -> i32 {
    let mag = (c.unsigned_abs() as i64 * mf + offset) >> qbits;
    clip_level(if c < 0 { -mag } else { mag })
}

/// `(t * sf * 2^(QP/6) + round) >> shift`, clipped to 16 bits.
#[inline]
pub(crate) fn rescale_level(level: i32, sf: i64, cfg: &QuantConfig) -> i32 {
    let shift = cfg.dequant_shift();
    let v = ((level as i64 * sf) << cfg.qp.per()) + (1i64 << (shift - 1));
    clip_level(v >> shift)
}

pub fn urq_quantise(coeffs: &CoeffBlock, cfg: &QuantConfig) -> Result<LevelBlock> {
    cfg.check(coeffs.size())?;
    let mf = cfg.mf() as i64;
    let offset = cfg.offset();
    let qbits = cfg.qbits();
    let levels = coeffs
        .coeffs
        .iter()
        .map(|&c| scale_level(c, mf, offset, qbits))
        .collect();
    Ok(LevelBlock { size: cfg.size, levels })
}

/// Dequantised coefficient for a single level.
pub fn urq_dequantise_level(level: i32, cfg: &QuantConfig) -> i32 {
    rescale_level(level, cfg.sf() as i64, cfg)
}

pub fn urq_dequantise(levels: &LevelBlock, cfg: &QuantConfig) -> Result<Vec<i32>> {
    cfg.check(levels.size)?;
    let sf = cfg.sf() as i64;
    Ok(levels.levels.iter().map(|&t| rescale_level(t, sf, cfg)).collect())
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::transform::{BlockClass, Channel};

    fn qp(v: i64) -> Qp {
        Qp::new(v).unwrap()
    }

    fn cfg(q: i64, size: TbSize, bd: u8, dz: DeadzoneMode) -> QuantConfig {
        QuantConfig::new(qp(q), size, bd, dz)
    }

    #[test]
    fn qstep_table_values() {
        let expect = [0.6300, 0.7071, 0.7937, 0.8909, 1.0000, 1.1225];
        for (i, e) in expect.iter().enumerate() {
            assert!((qstep_from_qp(qp(i as i64)) - e).abs() <= 1e-4);
        }
        assert_eq!(qstep_from_qp(qp(22)), 8.0);
    }

    #[test]
    fn qp_from_qstep_inverts() {
        assert_eq!(qp_from_qstep(8.0).unwrap(), qp(22));
        assert_eq!(qp_from_qstep(1.0).unwrap(), qp(4));
        assert_eq!(qp_from_qstep(1.1225).unwrap(), qp(5));
        assert_eq!(qp_from_qstep(0.63).unwrap(), qp(0));
        assert_eq!(qp_from_qstep(1e-6).unwrap(), qp(0));
        assert_eq!(qp_from_qstep(1e9).unwrap(), qp(51));
        for q in Qp::all() {
            assert_eq!(qp_from_qstep(qstep_from_qp(q)).unwrap(), q);
        }
        assert!(qp_from_qstep(0.0).is_err());
        assert!(qp_from_qstep(-1.0).is_err());
        assert!(qp_from_qstep(f64::NAN).is_err());
    }

    #[test]
    fn qp_range() {
        assert!(Qp::new(-1).is_err());
        assert!(Qp::new(52).is_err());
        assert_eq!(Qp::new(51).unwrap().value(), 51);
    }

    #[test]
    fn mf_sf_lookup() {
        assert_eq!(mf_sf(qp(0)), (26214, 40));
        assert_eq!(mf_sf(qp(22)), (16384, 64));
        assert_eq!(mf_sf(qp(27)), (18396, 57));
        assert_eq!(mf_sf(qp(26)), (20560, 51));
    }

    #[test]
    fn table_products_near_two_pow_20() {
        for i in 0..6 {
            let p = MF[i] as f64 * SF[i] as f64;
            assert!((p - 1048576.0).abs() / 1048576.0 <= 1e-4, "row {i}");
            let q = qp(i as i64);
            assert!((mf_closed_form(q) - MF[i] as f64).abs() / MF[i] as f64 <= 0.01);
            assert!((sf_closed_form(q) - SF[i] as f64).abs() / SF[i] as f64 <= 0.01);
        }
    }

    #[test]
    fn step_growth() {
        for v in 0..51 {
            let r = qstep_from_qp(qp(v + 1)) / qstep_from_qp(qp(v));
            assert!((r - 2f64.powf(1.0 / 6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn qbits_matches_eight_bit_form() {
        for q in Qp::all() {
            for size in TbSize::ALL {
                let c = QuantConfig::new(q, size, 8, DeadzoneMode::Half);
                assert_eq!(c.qbits(), 21 + q.per() - size.log2());
                assert!(QuantConfig::new(q, size, 10, DeadzoneMode::Half).qbits() > 0);
            }
        }
    }

    fn block(size: TbSize, coeffs: Vec<i32>) -> CoeffBlock {
        CoeffBlock::new(BlockClass::new(Channel::Luma, size), coeffs).unwrap()
    }

    #[test]
    fn quantise_against_rational_oracle() {
        let c = cfg(4, TbSize::N4, 8, DeadzoneMode::Half);
        assert_eq!(c.qbits(), 19);
        assert_eq!(c.offset(), 1 << 18);
        let mut coeffs = vec![0; 16];
        coeffs[0] = 100;
        coeffs[1] = -100;
        coeffs[2] = 7;
        let t = urq_quantise(&block(TbSize::N4, coeffs.clone()), &c).unwrap();
        for (i, &cv) in coeffs.iter().enumerate() {
            // round((|C| m + o) / 2^qbits) evaluated over the rationals
            let num = cv.unsigned_abs() as f64 * 16384.0 + 262144.0;
            let want = (num / 524288.0).floor() as i32 * cv.signum();
            assert_eq!(t.levels[i], want);
        }
        assert_eq!(t.levels[0], 3);
        assert_eq!(t.levels[1], -3);
    }

    #[test]
    fn zero_block_and_sign_symmetry() {
        let c = cfg(30, TbSize::N8, 8, DeadzoneMode::IntraThird);
        let z = urq_quantise(&block(TbSize::N8, vec![0; 64]), &c).unwrap();
        assert!(z.is_zero());
        assert!(urq_dequantise(&z, &c).unwrap().iter().all(|&v| v == 0));

        let pos: Vec<i32> = (0..64).map(|i| i * 517 % 9000).collect();
        let neg: Vec<i32> = pos.iter().map(|v| -v).collect();
        let tp = urq_quantise(&block(TbSize::N8, pos), &c).unwrap();
        let tn = urq_quantise(&block(TbSize::N8, neg), &c).unwrap();
        for (a, b) in tp.levels.iter().zip(&tn.levels) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn dequantise_direct_evaluation() {
        let c = cfg(4, TbSize::N4, 8, DeadzoneMode::Half);
        assert_eq!(urq_dequantise_level(3, &c), 96);
        assert_eq!(urq_dequantise_level(-3, &c), -96);
        let c = cfg(22, TbSize::N16, 10, DeadzoneMode::Half);
        // (5 * 64 * 8 + 2^4) >> 5
        assert_eq!(urq_dequantise_level(5, &c), (5 * 64 * 8 + 16) >> 5);
    }

    #[test]
    fn uniform_triple_across_positions() {
        let c = cfg(27, TbSize::N16, 8, DeadzoneMode::IntraThird);
        let coeffs = vec![1234; 256];
        let t = urq_quantise(&block(TbSize::N16, coeffs), &c).unwrap();
        assert!(t.levels.iter().all(|&l| l == t.levels[0]));
    }

    #[test]
    fn size_mismatch_is_error() {
        let c = cfg(22, TbSize::N8, 8, DeadzoneMode::Half);
        assert!(urq_quantise(&block(TbSize::N4, vec![0; 16]), &c).is_err());
    }

    #[test]
    fn coefficient_round_trip_scales_with_step() {
        for q in [0i64, 12, 22, 37, 51] {
            for size in TbSize::ALL {
                for bd in [8u8, 10] {
                    let c = cfg(q, size, bd, DeadzoneMode::Half);
                    let step = c.qstep() * c.transform_gain();
                    for coeff in (-20000..20000).step_by(997) {
                        let t = scale_level(coeff, c.mf() as i64, c.offset(), c.qbits());
                        let back = urq_dequantise_level(t, &c);
                        assert!(
                            ((coeff - back).abs() as f64) <= 0.5 * step + 1.0 + 0.01 * coeff.abs() as f64,
                            "qp {q} n {size} bd {bd}: {coeff} -> {t} -> {back}"
                        );
                    }
                }
            }
        }
    }
}
