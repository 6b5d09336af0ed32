//! Annulus and rectangular-bin assignment.

use serde::{Deserialize, Serialize};

pub const BIN_COUNT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinKind {
    /// Concentric rings around the pattern centroid.
    Annulus,
    /// Horizontal strips measured by vertical offset from the image centre.
    Rectangular,
}

/// Bins `1..=40` of equal `width` (pixels) radiating out from `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub kind: BinKind,
    pub width: f64,
    pub center: (f64, f64),
}

impl BinningScheme {
    /// Bin of a point, or `None` beyond the last bin.
    pub fn bin_of(&self, point: (f64, f64)) -> Option<usize> {
        let offset = match self.kind {
            BinKind::Annulus => (point.0 - self.center.0).hypot(point.1 - self.center.1),
            BinKind::Rectangular => (point.1 - self.center.1).abs(),
        };
        assign_bin(offset, self.width)
    }

    /// Bin of every point plus the per-bin population (index 0 is bin 1).
    pub fn assign(&self, points: &[(f64, f64)]) -> (Vec<Option<usize>>, [usize; BIN_COUNT]) {
        let mut counts = [0usize; BIN_COUNT];
        let bins = points
            .iter()
            .map(|&p| {
                let b = self.bin_of(p);
                if let Some(j) = b {
                    counts[j - 1] += 1;
                }
                b
            })
            .collect();
        (bins, counts)
    }
}

/// Bin `j` holds offsets in `[(j-1)·width, j·width)`.
pub fn assign_bin(offset: f64, width: f64) -> Option<usize> {
    if !(width > 0.0) || !offset.is_finite() || offset < 0.0 {
        return None;
    }
    let j = (offset / width).floor() as usize + 1;
    (j <= BIN_COUNT).then_some(j)
}

/// Most populated bin (lowest index on ties) and its population; `None`
/// when every bin is empty.
pub fn busiest_bin(counts: &[usize; BIN_COUNT]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|(_, m)| c > m) {
            best = Some((i + 1, c));
        }
    }
    best
}
