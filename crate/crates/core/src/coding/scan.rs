//! Coefficient scan orders built from 4x4 sub-blocks.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::TbSize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKind {
    #[default]
    Diagonal,
    Horizontal,
    Vertical,
}

impl ScanKind {
    pub const ALL: [ScanKind; 3] = [Self::Diagonal, Self::Horizontal, Self::Vertical];

    pub fn id(self) -> u8 {
        match self {
            Self::Diagonal => 0,
            Self::Horizontal => 1,
            Self::Vertical => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Diagonal => "diagonal",
            Self::Horizontal => "horizontal",
            Self::Vertical => "vertical",
        }
    }
}

impl fmt::Display for ScanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" | "diag" => Ok(Self::Diagonal),
            "horizontal" | "hor" => Ok(Self::Horizontal),
            "vertical" | "ver" => Ok(Self::Vertical),
            other => Err(Error::Config(format!("unknown scan kind `{other}`"))),
        }
    }
}

/// Forward traversal of a `g`x`g` grid, as `(x, y)` pairs.
fn grid_pattern(kind: ScanKind, g: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(g * g);
    match kind {
        ScanKind::Diagonal => {
            // up-right: each anti-diagonal runs from bottom-left to top-right
            for d in 0..(2 * g - 1) {
                let y_hi = d.min(g - 1);
                let y_lo = d.saturating_sub(g - 1);
                for y in (y_lo..=y_hi).rev() {
                    out.push((d - y, y));
                }
            }
        }
        ScanKind::Horizontal => {
            for y in 0..g {
                for x in 0..g {
                    out.push((x, y));
                }
            }
        }
        ScanKind::Vertical => {
            for x in 0..g {
                for y in 0..g {
                    out.push((x, y));
                }
            }
        }
    }
    out
}

/// Scan order over every cell of an `N`x`N` block, stored high frequency
/// first so that DC is the final entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanOrder {
    pub kind: ScanKind,
    pub size: TbSize,
    /// Reverse-scan `(x, y)` positions.
    pub positions: Vec<(u8, u8)>,
    /// Raster index of each reverse-scan entry.
    raster: Vec<u16>,
}

impl ScanOrder {
    fn build(kind: ScanKind, size: TbSize) -> Self {
        let n = size.n();
        let sub = grid_pattern(kind, 4);
        let mut forward = Vec::with_capacity(n * n);
        for (sx, sy) in grid_pattern(kind, n / 4) {
            for &(x, y) in &sub {
                forward.push(((sx * 4 + x) as u8, (sy * 4 + y) as u8));
            }
        }
        forward.reverse();
        let raster = forward
            .iter()
            .map(|&(x, y)| (y as usize * n + x as usize) as u16)
            .collect();
        Self {
            kind,
            size,
            positions: forward,
            raster,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Raster index of the cell at forward-scan index `i` (0 is DC).
    #[inline]
    pub fn raster_at_forward(&self, i: usize) -> usize {
        self.raster[self.raster.len() - 1 - i] as usize
    }

    /// Forward-scan positions, DC first.
    pub fn forward(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        self.positions.iter().rev().copied()
    }
}

pub fn scan_order(kind: ScanKind, size: TbSize) -> &'static ScanOrder {
    static ORDERS: OnceLock<Vec<ScanOrder>> = OnceLock::new();
    let orders = ORDERS.get_or_init(|| {
        ScanKind::ALL
            .iter()
            .flat_map(|&k| TbSize::ALL.iter().map(move |&s| ScanOrder::build(k, s)))
            .collect()
    });
    &orders[kind.id() as usize * 4 + size.index()]
}
