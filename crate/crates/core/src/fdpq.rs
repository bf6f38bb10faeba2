//! Frequency-dependent perceptual quantisation (FDPQ).
//!
//! Every AC coefficient gets a weight `w = exp(-d^2)`, where `d` is its
//! Euclidean distance from the DC position normalised by the distance of the
//! farthest corner. The forward multiplication factor becomes `round(m * w)`
//! and the inverse scaling factor `round(2^20 / m * w)`, so coefficients far
//! from DC are quantised more coarsely while DC itself is left untouched.
//!
//! Both factor tables depend only on `(QP mod 6, position, N)`; they are
//! built once and shared by encoder and decoder.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quant::{rescale_level, scale_level, LevelBlock, Qp, QuantConfig, MF};
use crate::transform::{CoeffBlock, TbSize};

/// Normalised distance of `(x, y)` from DC in an `n`x`n` block.
pub fn distance(x: usize, y: usize, n: usize) -> Result<f64> {
    if n < 2 || x >= n || y >= n {
        return Err(Error::PositionOutOfBlock { x, y, n });
    }
    let far = 2.0 * ((n - 1) * (n - 1)) as f64;
    Ok((((x * x + y * y) as f64) / far).sqrt())
}

pub fn weight(d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidDistance(d));
    }
    Ok((-d * d).exp())
}

/// Distance and weight for every position of one block size.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    pub size: TbSize,
    /// Row-major, indexed `[y * N + x]`.
    pub d: Vec<f64>,
    pub w: Vec<f64>,
}

impl WeightMap {
    fn build(size: TbSize) -> Self {
        let n = size.n();
        let mut d = Vec::with_capacity(n * n);
        let mut w = Vec::with_capacity(n * n);
        for y in 0..n {
            for x in 0..n {
                let dist = distance(x, y, n).expect("position inside block");
                d.push(dist);
                w.push(weight(dist).expect("distance is normalised"));
            }
        }
        Self { size, d, w }
    }

    #[inline]
    pub fn d_at(&self, x: usize, y: usize) -> f64 {
        self.d[y * self.size.n() + x]
    }

    #[inline]
    pub fn w_at(&self, x: usize, y: usize) -> f64 {
        self.w[y * self.size.n() + x]
    }
}

pub fn weight_map(size: TbSize) -> &'static WeightMap {
    static MAPS: OnceLock<[WeightMap; 4]> = OnceLock::new();
    &MAPS.get_or_init(|| TbSize::ALL.map(WeightMap::build))[size.index()]
}

pub fn weight_map_for(n: usize) -> Result<&'static WeightMap> {
    Ok(weight_map(TbSize::new(n)?))
}

struct FactorTables {
    /// `[size][qp % 6]` -> row-major modified MF.
    mf: [[Vec<i32>; 6]; 4],
    sf: [[Vec<i32>; 6]; 4],
}

fn tables() -> &'static FactorTables {
    static TABLES: OnceLock<FactorTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let build = |size: TbSize, f: &dyn Fn(f64, f64) -> f64| -> [Vec<i32>; 6] {
            let map = weight_map(size);
            std::array::from_fn(|rem| {
                let m = MF[rem] as f64;
                map.w.iter().map(|&w| f(m, w).round() as i32).collect()
            })
        };
        FactorTables {
            mf: TbSize::ALL.map(|size| build(size, &|m, w| m * w)),
            sf: TbSize::ALL.map(|size| build(size, &|m, w| 1048576.0 / m * w)),
        }
    })
}

/// Modified multiplication factor table for one block, row-major.
pub fn modified_mf_table(qp: Qp, size: TbSize) -> &'static [i32] {
    &tables().mf[size.index()][qp.rem()]
}

/// Modified scaling factor table for one block, row-major.
pub fn modified_sf_table(qp: Qp, size: TbSize) -> &'static [i32] {
    &tables().sf[size.index()][qp.rem()]
}

pub fn modified_mf(qp: Qp, x: usize, y: usize, size: TbSize) -> Result<i32> {
    let n = size.n();
    if x >= n || y >= n {
        return Err(Error::PositionOutOfBlock { x, y, n });
    }
    Ok(modified_mf_table(qp, size)[y * n + x])
}

pub fn modified_sf(qp: Qp, x: usize, y: usize, size: TbSize) -> Result<i32> {
    let n = size.n();
    if x >= n || y >= n {
        return Err(Error::PositionOutOfBlock { x, y, n });
    }
    Ok(modified_sf_table(qp, size)[y * n + x])
}

fn check(cfg: &QuantConfig, size: TbSize) -> Result<()> {
    if cfg.size != size {
        return Err(Error::DimensionMismatch(format!(
            "block is {size}x{size} but the quantiser is configured for {}x{}",
            cfg.size, cfg.size
        )));
    }
    Ok(())
}

/// URQ with a position-dependent multiplication factor.
pub fn fdpq_quantise(coeffs: &CoeffBlock, cfg: &QuantConfig) -> Result<LevelBlock> {
    check(cfg, coeffs.size())?;
    let mf = modified_mf_table(cfg.qp, cfg.size);
    let offset = cfg.offset();
    let qbits = cfg.qbits();
    let levels = coeffs
        .coeffs
        .iter()
        .zip(mf)
        .map(|(&c, &m)| scale_level(c, m as i64, offset, qbits))
        .collect();
    Ok(LevelBlock { size: cfg.size, levels })
}

/// URQ dequantisation with a position-dependent scaling factor.
pub fn fdpq_dequantise(levels: &LevelBlock, cfg: &QuantConfig) -> Result<Vec<i32>> {
    check(cfg, levels.size)?;
    let sf = modified_sf_table(cfg.qp, cfg.size);
    Ok(levels
        .levels
        .iter()
        .zip(sf)
        .map(|(&t, &s)| rescale_level(t, s as i64, cfg))
        .collect())
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::quant::{urq_dequantise, urq_quantise, DeadzoneMode};
    use crate::transform::{BlockClass, Channel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FIGURE_4X4: [[(f64, f64); 4]; 4] = [
        [(0.0000, 1.0000), (0.2357, 0.9460), (0.4714, 0.8007), (0.7071, 0.6065)],
        [(0.2357, 0.9460), (0.3333, 0.8948), (0.5271, 0.7575), (0.7454, 0.5737)],
        [(0.4714, 0.8007), (0.5271, 0.7575), (0.6667, 0.6412), (0.8498, 0.4857)],
        [(0.7071, 0.6065), (0.7454, 0.5737), (0.8498, 0.4857), (1.0000, 0.3679)],
    ];

    fn qp(v: i64) -> Qp {
        Qp::new(v).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(0, 0, 4).unwrap(), 0.0);
        assert!((distance(1, 1, 4).unwrap() - 0.3333).abs() < 5e-5);
        assert!((distance(3, 0, 4).unwrap() - 0.7071).abs() < 5e-5);
        assert!((distance(1, 0, 8).unwrap() - (1.0f64 / 98.0).sqrt()).abs() < 1e-12);
        assert!(distance(4, 0, 4).is_err());
        assert!(distance(0, 0, 1).is_err());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(0.0).unwrap(), 1.0);
        assert!((weight(1.0).unwrap() - 0.3679).abs() < 5e-5);
        assert!((weight(0.2357).unwrap() - 0.9460).abs() < 5e-5);
        assert!((weight(0.8498).unwrap() - 0.4857).abs() < 5e-5);
        assert!(weight(1.01).is_err());
        assert!(weight(-0.1).is_err());
    }

    #[test]
    fn four_by_four_map_matches_reference_table() {
        let map = weight_map(TbSize::N4);
        for (y, row) in FIGURE_4X4.iter().enumerate() {
            for (x, &(d, w)) in row.iter().enumerate() {
                // one unit in the fourth decimal: the reference prints
                // d = 0.527046 as 0.5271 and w = 0.573753 as 0.5737
                assert!((map.d_at(x, y) - d).abs() < 1e-4, "d at ({x},{y})");
                assert!((map.w_at(x, y) - w).abs() < 1e-4, "w at ({x},{y})");
            }
        }
    }

    #[test]
    fn map_invariants_hold_for_every_size() {
        for size in TbSize::ALL {
            let n = size.n();
            let map = weight_map(size);
            assert_eq!(map.d_at(0, 0), 0.0);
            assert_eq!(map.w_at(0, 0), 1.0);
            assert!((map.d_at(n - 1, n - 1) - 1.0).abs() < 1e-12);
            assert!((map.w_at(n - 1, n - 1) - (-1f64).exp()).abs() < 1e-12);
            for y in 0..n {
                for x in 0..n {
                    assert_eq!(map.d_at(x, y), map.d_at(y, x));
                    assert_eq!(map.w_at(x, y), map.w_at(y, x));
                }
            }
            let mut pairs: Vec<(f64, f64)> = map.d.iter().copied().zip(map.w.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for p in pairs.windows(2) {
                if p[1].0 > p[0].0 {
                    assert!(p[1].1 < p[0].1);
                } else {
                    assert_eq!(p[1].1, p[0].1);
                }
            }
        }
        assert!(weight_map_for(12).is_err());
    }

    #[test]
    fn modified_factor_examples() {
        assert_eq!(modified_mf(qp(22), 0, 0, TbSize::N4).unwrap(), 16384);
        // 16384 / e = 6027.34
        assert_eq!(modified_mf(qp(22), 3, 3, TbSize::N4).unwrap(), 6027);
        let w11 = (-(1.0f64 / 9.0)).exp();
        assert_eq!(
            modified_mf(qp(0), 1, 1, TbSize::N4).unwrap(),
            (26214.0 * w11).round() as i32
        );
        assert_eq!(modified_sf(qp(22), 0, 0, TbSize::N4).unwrap(), 64);
        assert_eq!(modified_sf(qp(22), 3, 3, TbSize::N4).unwrap(), 24);
        assert_eq!(modified_sf(qp(0), 0, 0, TbSize::N4).unwrap(), 40);
        assert!(modified_mf(qp(0), 4, 0, TbSize::N4).is_err());
    }

    #[test]
    fn dc_factors_equal_table_for_every_qp_and_size() {
        for q in Qp::all() {
            for size in TbSize::ALL {
                let (m, s) = crate::quant::mf_sf(q);
                assert_eq!(modified_mf(q, 0, 0, size).unwrap(), m);
                assert_eq!(modified_sf(q, 0, 0, size).unwrap(), s);
            }
        }
    }

    fn random_block(rng: &mut ChaCha8Rng, size: TbSize) -> CoeffBlock {
        let coeffs = (0..size.area()).map(|_| rng.gen_range(-6000..6000)).collect();
        CoeffBlock::new(BlockClass::new(Channel::Luma, size), coeffs).unwrap()
    }

    #[test]
    fn zero_and_dc_only_blocks() {
        let cfg = QuantConfig::new(qp(27), TbSize::N8, 8, DeadzoneMode::IntraThird);
        let class = BlockClass::new(Channel::Luma, TbSize::N8);
        let z = fdpq_quantise(&CoeffBlock::zeros(class), &cfg).unwrap();
        assert!(z.is_zero());
        assert!(fdpq_dequantise(&z, &cfg).unwrap().iter().all(|&v| v == 0));

        let mut dc = CoeffBlock::zeros(class);
        dc.coeffs[0] = 4321;
        assert_eq!(fdpq_quantise(&dc, &cfg).unwrap(), urq_quantise(&dc, &cfg).unwrap());
    }

    #[test]
    fn never_coarser_than_urq_levels_and_reconstructions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for size in TbSize::ALL {
            for q in [17, 22, 27, 32, 37] {
                let cfg = QuantConfig::new(qp(q), size, 8, DeadzoneMode::Half);
                for _ in 0..50 {
                    let block = random_block(&mut rng, size);
                    let f = fdpq_quantise(&block, &cfg).unwrap();
                    let u = urq_quantise(&block, &cfg).unwrap();
                    assert_eq!(f.levels[0], u.levels[0]);
                    for (a, b) in f.levels.iter().zip(&u.levels) {
                        assert!(a.abs() <= b.abs());
                    }
                    let fr = fdpq_dequantise(&u, &cfg).unwrap();
                    let ur = urq_dequantise(&u, &cfg).unwrap();
                    assert_eq!(fr[0], ur[0]);
                    for (a, b) in fr.iter().zip(&ur) {
                        assert!(a.abs() <= b.abs());
                    }
                }
            }
        }
    }

    #[test]
    fn net_response_is_weight_squared() {
        // Quantise-then-dequantise scales a coefficient by roughly w^2 since
        // both factors carry the weight; integer SFs add up to ~2% error.
        let size = TbSize::N8;
        let cfg = QuantConfig::new(qp(4), size, 8, DeadzoneMode::Half);
        let class = BlockClass::new(Channel::Luma, size);
        let map = weight_map(size);
        let block = CoeffBlock::new(class, vec![20000; 64]).unwrap();
        let rec = fdpq_dequantise(&fdpq_quantise(&block, &cfg).unwrap(), &cfg).unwrap();
        for (i, &r) in rec.iter().enumerate() {
            let want = 20000.0 * map.w[i] * map.w[i];
            assert!((r as f64 - want).abs() / want < 0.03, "pos {i}: {r} vs {want}");
        }
    }
}
