//! Three-mode intra predictor (DC, horizontal, vertical).

/// Intra prediction mode; ids are what the bitstream carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntraMode {
    Dc,
    Horizontal,
    Vertical,
}

impl IntraMode {
    pub const ALL: [IntraMode; 3] = [Self::Dc, Self::Horizontal, Self::Vertical];

    pub fn id(self) -> u8 {
        match self {
            Self::Dc => 0,
            Self::Horizontal => 1,
            Self::Vertical => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }
}

/// Reconstructed samples of one channel on the padded block grid.
#[derive(Clone, Debug)]
pub struct ReconBuffer {
    pub width: usize,
    pub height: usize,
    pub data: Vec<i32>,
}

impl ReconBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn write_block(&mut self, x0: usize, y0: usize, n: usize, block: &[i32]) {
        for (r, row) in block.chunks_exact(n).enumerate() {
            let start = (y0 + r) * self.width + x0;
            self.data[start..start + n].copy_from_slice(row);
        }
    }

    /// Row above and column left of a block, where they exist.
    pub fn neighbours(&self, x0: usize, y0: usize, n: usize) -> Neighbours {
        let top = (y0 > 0).then(|| {
            let start = (y0 - 1) * self.width + x0;
            self.data[start..start + n].to_vec()
        });
        let left = (x0 > 0).then(|| (0..n).map(|r| self.data[(y0 + r) * self.width + x0 - 1]).collect());
        Neighbours { top, left }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Neighbours {
    pub top: Option<Vec<i32>>,
    pub left: Option<Vec<i32>>,
}

impl Neighbours {
    /// Modes the encoder may choose from. Blocks missing either neighbour
    /// are restricted to DC.
    pub fn allowed_modes(&self) -> &'static [IntraMode] {
        if self.top.is_some() && self.left.is_some() {
            &IntraMode::ALL
        } else {
            &IntraMode::ALL[..1]
        }
    }

    fn dc(&self, bit_depth: u8) -> i32 {
        let mut sum = 0i64;
        let mut count = 0i64;
        for edge in [&self.top, &self.left].into_iter().flatten() {
            sum += edge.iter().map(|&v| v as i64).sum::<i64>();
            count += edge.len() as i64;
        }
        if count == 0 {
            1 << (bit_depth - 1)
        } else {
            ((sum + count / 2) / count) as i32
        }
    }
}

/// Builds the `n`x`n` prediction for `mode`. Horizontal and vertical modes
/// fall back to DC when their source edge is missing.
pub fn predict(mode: IntraMode, nb: &Neighbours, n: usize, bit_depth: u8) -> Vec<i32> {
    match (mode, &nb.top, &nb.left) {
        (IntraMode::Horizontal, _, Some(left)) => left.iter().flat_map(|&v| std::iter::repeat_n(v, n)).collect(),
        (IntraMode::Vertical, Some(top), _) => (0..n).flat_map(|_| top.iter().copied()).collect(),
        _ => vec![nb.dc(bit_depth); n * n],
    }
}

/// Mode with the smallest sum of squared residuals; ties go to the lower id.
pub fn choose_mode(original: &[i32], nb: &Neighbours, n: usize, bit_depth: u8) -> (IntraMode, Vec<i32>) {
    let mut best: Option<(i64, IntraMode, Vec<i32>)> = None;
    for &mode in nb.allowed_modes() {
        let pred = predict(mode, nb, n, bit_depth);
        let ssr: i64 = original.iter().zip(&pred).map(|(&o, &p)| ((o - p) as i64).pow(2)).sum();
        if best.as_ref().is_none_or(|(b, _, _)| ssr < *b) {
            best = Some((ssr, mode, pred));
        }
    }
    let (_, mode, pred) = best.expect("at least one mode is allowed");
    (mode, pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_block_predicts_mid_level() {
        let buf = ReconBuffer::new(8, 8);
        let nb = buf.neighbours(0, 0, 4);
        assert_eq!(nb.allowed_modes(), &[IntraMode::Dc]);
        assert_eq!(predict(IntraMode::Dc, &nb, 4, 8), vec![128; 16]);
        assert_eq!(predict(IntraMode::Dc, &nb, 4, 10), vec![512; 16]);
    }

    #[test]
    fn directional_modes_copy_edges() {
        let mut buf = ReconBuffer::new(8, 8);
        for (i, v) in buf.data.iter_mut().enumerate() {
            *v = i as i32;
        }
        let nb = buf.neighbours(4, 4, 4);
        assert_eq!(nb.top.as_deref(), Some(&[28, 29, 30, 31][..]));
        assert_eq!(nb.left.as_deref(), Some(&[35, 43, 51, 59][..]));
        let v = predict(IntraMode::Vertical, &nb, 4, 8);
        assert_eq!(&v[12..16], &[28, 29, 30, 31]);
        let h = predict(IntraMode::Horizontal, &nb, 4, 8);
        assert_eq!(&h[4..8], &[43, 43, 43, 43]);
        let dc = predict(IntraMode::Dc, &nb, 4, 8);
        assert_eq!(dc[0], (28 + 29 + 30 + 31 + 35 + 43 + 51 + 59 + 4) / 8);
    }

    #[test]
    fn chooses_matching_direction() {
        let mut buf = ReconBuffer::new(8, 8);
        for y in 0..8 {
            for x in 0..8 {
                buf.data[y * 8 + x] = (x * 10) as i32;
            }
        }
        let nb = buf.neighbours(4, 4, 4);
        let orig: Vec<i32> = (0..16).map(|i| (4 + i % 4) * 10).collect();
        assert_eq!(choose_mode(&orig, &nb, 4, 8).0, IntraMode::Vertical);

        // flat neighbourhood: every mode ties, DC wins
        let flat = ReconBuffer::new(8, 8);
        let nb = flat.neighbours(4, 4, 4);
        assert_eq!(choose_mode(&[0; 16], &nb, 4, 8).0, IntraMode::Dc);
    }
}
