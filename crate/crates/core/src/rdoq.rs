//! Rate-distortion optimised quantisation (RDOQ).
//!
//! Each coefficient picks the level among `{0, l1, l1 + 1}` that minimises
//! `J = (C - C')^2 + lambda * bits`, where `l1` is the offset-free floor of
//! the URQ scaler and `bits` follows the exp-Golomb surrogate used by the
//! entropy coder's level syntax.

use crate::error::{Error, Result};
use crate::quant::{urq_dequantise_level, LevelBlock, Qp, QuantConfig};
use crate::transform::CoeffBlock;

/// Intra Lagrange multiplier in the sample domain.
pub fn lambda_schedule(qp: Qp) -> f64 {
    0.57 * 2f64.powf((qp.value() as f64 - 12.0) / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdoqParams {
    /// Lagrange multiplier in coefficient-domain units, i.e. it weighs bits
    /// against squared transform-coefficient error.
    pub lambda: f64,
}

impl RdoqParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    /// The default schedule mapped into the coefficient domain of `cfg` by the
    /// squared forward-transform gain. The step size carries no bit-depth QP
    /// offset, so neither does the multiplier.
    pub fn from_schedule(cfg: &QuantConfig) -> Self {
        let gain = cfg.transform_gain();
        Self {
            lambda: lambda_schedule(cfg.qp) * gain * gain,
        }
    }
}

/// Length of the order-0 exp-Golomb code for `v`.
#[inline]
pub fn exp_golomb_len(v: u32) -> u32 {
    2 * (31 - (v + 1).leading_zeros()) + 1
}

/// Bit estimate for a level magnitude: a significance flag, then sign and
/// `EG0(l - 1)` for non-zero levels.
#[inline]
pub fn level_bits(level: u32) -> u32 {
    if level == 0 {
        1
    } else {
        2 + exp_golomb_len(level - 1)
    }
}

/// `(floor(|C| m / 2^qbits), that + 1)`.
pub fn candidate_levels(c: i32, cfg: &QuantConfig) -> (u32, u32) {
    let l1 = ((c.unsigned_abs() as u64 * cfg.mf() as u64) >> cfg.qbits()) as u32;
    (l1, l1 + 1)
}

/// Lagrangian cost of coding `c` with magnitude `level` (sign taken from `c`).
pub fn level_cost(c: i32, level: u32, cfg: &QuantConfig, params: &RdoqParams) -> f64 {
    let signed = if c < 0 { -(level as i32) } else { level as i32 };
    let err = (c - urq_dequantise_level(signed, cfg)) as f64;
    err * err + params.lambda * level_bits(level) as f64
}

fn choose_level(c: i32, cfg: &QuantConfig, params: &RdoqParams) -> i32 {
    let (l1, l2) = candidate_levels(c, cfg);
    let mut best = 0u32;
    let mut best_cost = level_cost(c, 0, cfg, params);
    for l in [l1, l2] {
        if l == 0 {
            continue;
        }
        let cost = level_cost(c, l, cfg, params);
        if cost < best_cost {
            best = l;
            best_cost = cost;
        }
    }
    let mag = best.min(i16::MAX as u32) as i32;
    if c < 0 {
        -mag
    } else {
        mag
    }
}

pub fn rdoq_quantise(coeffs: &CoeffBlock, cfg: &QuantConfig, params: &RdoqParams) -> Result<LevelBlock> {
    if coeffs.size() != cfg.size {
        return Err(Error::DimensionMismatch(format!(
            "block is {}x{} but the quantiser is configured for {}x{}",
            coeffs.size(),
            coeffs.size(),
            cfg.size,
            cfg.size
        )));
    }
    let levels = coeffs.coeffs.iter().map(|&c| choose_level(c, cfg, params)).collect();
    Ok(LevelBlock { size: cfg.size, levels })
}
