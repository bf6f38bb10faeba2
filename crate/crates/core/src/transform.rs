//! HEVC core transforms: integer DCT approximations for 4x4 to 32x32 and the
//! 4x4 DST used for intra luma residuals.
//!
//! The forward path applies a horizontal then a vertical pass with right
//! shifts `log2 N + B - 9` and `log2 N + 6`, which leaves coefficients scaled
//! by `2^(15 - B - log2 N)` relative to an orthonormal transform. The inverse
//! path uses shifts 7 and `20 - B` and clips intermediates to 16 bits.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Transform block size, one of 4, 8, 16, 32.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TbSize(u8);

impl TbSize {
    pub const N4: TbSize = TbSize(2);
    pub const N8: TbSize = TbSize(3);
    pub const N16: TbSize = TbSize(4);
    pub const N32: TbSize = TbSize(5);
    pub const ALL: [TbSize; 4] = [Self::N4, Self::N8, Self::N16, Self::N32];

    pub fn new(n: usize) -> Result<Self> {
        match n {
            4 => Ok(Self::N4),
            8 => Ok(Self::N8),
            16 => Ok(Self::N16),
            32 => Ok(Self::N32),
            other => Err(Error::UnsupportedBlockSize(other)),
        }
    }

    #[inline]
    pub fn n(self) -> usize {
        1 << self.0
    }

    #[inline]
    pub fn log2(self) -> u32 {
        self.0 as u32
    }

    #[inline]
    pub fn area(self) -> usize {
        self.n() * self.n()
    }

    /// Index into per-size tables, 0 for 4x4 through 3 for 32x32.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 2
    }
}

impl fmt::Display for TbSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.n())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Luma,
    Cb,
    Cr,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Self::Luma, Self::Cb, Self::Cr];

    pub fn is_luma(self) -> bool {
        self == Self::Luma
    }
}

/// Channel and size of an intra-coded transform block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockClass {
    pub channel: Channel,
    pub size: TbSize,
}

impl BlockClass {
    pub fn new(channel: Channel, size: TbSize) -> Self {
        Self { channel, size }
    }

    /// The DST replaces the DCT only for 4x4 intra luma blocks.
    pub fn uses_dst(self) -> bool {
        self.channel.is_luma() && self.size == TbSize::N4
    }

    pub fn kernel(self) -> Kernel {
        if self.uses_dst() {
            Kernel::Dst4
        } else {
            Kernel::Dct(self.size)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    Dct(TbSize),
    Dst4,
}

impl Kernel {
    /// Row-major `N x N` basis matrix; row `k` is the `k`-th basis function.
    pub fn matrix(self) -> &'static [i32] {
        match self {
            Kernel::Dst4 => &DST4,
            Kernel::Dct(size) => &dct_matrices()[size.index()],
        }
    }

    pub fn size(self) -> TbSize {
        match self {
            Kernel::Dst4 => TbSize::N4,
            Kernel::Dct(size) => size,
        }
    }
}

#[rustfmt::skip]
const DST4: [i32; 16] = [
    29,  55,  74,  84,
    74,  74,   0, -74,
    84, -29, -74,  55,
    55, -84,  74, -29,
];

/// Integer approximations of `64 * sqrt(2) * cos(j * pi / 64)` for
/// `j = 0..=32`, as used by the HEVC 32-point DCT. Entry 0 is the DC gain 64.
#[rustfmt::skip]
const DCT_COS: [i32; 33] = [
    64, 90, 90, 90, 89, 88, 87, 85, 83, 82, 80, 78, 75, 73, 70, 67,
    64, 61, 57, 54, 50, 46, 43, 38, 36, 31, 25, 22, 18, 13,  9,  4,
     0,
];

fn dct32_entry(k: usize, n: usize) -> i32 {
    if k == 0 {
        return 64;
    }
    let mut j = ((2 * n + 1) * k) % 128;
    if j > 64 {
        j = 128 - j;
    }
    if j > 32 {
        -DCT_COS[64 - j]
    } else {
        DCT_COS[j]
    }
}

fn dct_matrices() -> &'static [Vec<i32>; 4] {
    static MATRICES: OnceLock<[Vec<i32>; 4]> = OnceLock::new();
    MATRICES.get_or_init(|| {
        TbSize::ALL.map(|size| {
            let n = size.n();
            let step = 32 / n;
            let mut m = Vec::with_capacity(n * n);
            for k in 0..n {
                for col in 0..n {
                    m.push(dct32_entry(k * step, col));
                }
            }
            m
        })
    })
}

/// An `N x N` block of transform coefficients, row-major with the vertical
/// frequency as the row index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffBlock {
    pub class: BlockClass,
    pub coeffs: Vec<i32>,
}

impl CoeffBlock {
    pub fn new(class: BlockClass, coeffs: Vec<i32>) -> Result<Self> {
        if coeffs.len() != class.size.area() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a {}x{} block",
                coeffs.len(),
                class.size,
                class.size
            )));
        }
        Ok(Self { class, coeffs })
    }

    pub fn zeros(class: BlockClass) -> Self {
        Self {
            class,
            coeffs: vec![0; class.size.area()],
        }
    }

    pub fn size(&self) -> TbSize {
        self.class.size
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> i32 {
        self.coeffs[y * self.class.size.n() + x]
    }
}

#[inline]
fn clip16(v: i32) -> i32 {
    v.clamp(i16::MIN as i32, i16::MAX as i32)
}

#[inline]
fn round_shift(v: i32, shift: u32) -> i32 {
    (v + (1 << (shift - 1))) >> shift
}

pub fn forward_shifts(size: TbSize, bit_depth: u8) -> (u32, u32) {
    (size.log2() + bit_depth as u32 - 9, size.log2() + 6)
}

pub fn inverse_shifts(bit_depth: u8) -> (u32, u32) {
    (7, 20 - bit_depth as u32)
}

/// Forward 2-D transform of a row-major residual block.
pub fn forward_transform(residual: &[i32], class: BlockClass, bit_depth: u8) -> Result<CoeffBlock> {
    let n = class.size.n();
    if residual.len() != n * n {
        return Err(Error::UnsupportedBlockSize((residual.len() as f64).sqrt() as usize));
    }
    let t = class.kernel().matrix();
    let (s1, s2) = forward_shifts(class.size, bit_depth);

    // Horizontal pass: tmp[r][k] = sum_c x[r][c] * T[k][c].
    let mut tmp = vec![0i32; n * n];
    for r in 0..n {
        let row = &residual[r * n..(r + 1) * n];
        for k in 0..n {
            let basis = &t[k * n..(k + 1) * n];
            let acc: i32 = row.iter().zip(basis).map(|(&x, &b)| x * b).sum();
            tmp[r * n + k] = round_shift(acc, s1);
        }
    }

    // Vertical pass: out[k][c] = sum_r T[k][r] * tmp[r][c].
    let mut out = vec![0i32; n * n];
    for k in 0..n {
        let basis = &t[k * n..(k + 1) * n];
        for c in 0..n {
            let acc: i32 = (0..n).map(|r| basis[r] * tmp[r * n + c]).sum();
            out[k * n + c] = clip16(round_shift(acc, s2));
        }
    }
    Ok(CoeffBlock { class, coeffs: out })
}

/// Inverse 2-D transform back to a row-major residual block.
pub fn inverse_transform(block: &CoeffBlock, bit_depth: u8) -> Result<Vec<i32>> {
    let n = block.class.size.n();
    if block.coeffs.len() != n * n {
        return Err(Error::UnsupportedBlockSize((block.coeffs.len() as f64).sqrt() as usize));
    }
    let t = block.class.kernel().matrix();
    let (s1, s2) = inverse_shifts(bit_depth);
    let coeffs = &block.coeffs;

    // Vertical pass: tmp[r][c] = sum_k T[k][r] * X[k][c].
    let mut tmp = vec![0i32; n * n];
    for r in 0..n {
        for c in 0..n {
            let acc: i32 = (0..n).map(|k| t[k * n + r] * coeffs[k * n + c]).sum();
            tmp[r * n + c] = clip16(round_shift(acc, s1));
        }
    }

    // Horizontal pass: out[r][c] = sum_k tmp[r][k] * T[k][c].
    let mut out = vec![0i32; n * n];
    for r in 0..n {
        let row = &tmp[r * n..(r + 1) * n];
        for c in 0..n {
            let acc: i32 = (0..n).map(|k| row[k] * t[k * n + c]).sum();
            out[r * n + c] = clip16(round_shift(acc, s2));
        }
    }
    Ok(out)
}
