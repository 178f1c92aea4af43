use serde::{Deserialize, Serialize};

use super::SymmetricCsc;

/// Fraction of `n` a trailing row must fill to count as part of the arrowhead.
pub const DEFAULT_THICKNESS_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureStats {
    /// Max `|i - j|` over nonzeros of the leading `n - thickness` block.
    pub bandwidth: usize,
    /// Number of trailing dense rows.
    pub thickness: usize,
    /// `100 * nnz(full pattern) / n^2`.
    pub density_percent: f64,
}

pub fn structure_stats(m: &SymmetricCsc) -> StructureStats {
    structure_stats_with_threshold(m, DEFAULT_THICKNESS_THRESHOLD)
}

/// Like [`structure_stats`] with a configurable dense-row threshold in `(0, 1]`.
pub fn structure_stats_with_threshold(m: &SymmetricCsc, threshold: f64) -> StructureStats {
    let n = m.n();
    let mut row_count = vec![0usize; n];
    for (i, j, _) in m.iter() {
        row_count[i] += 1;
        if i != j {
            row_count[j] += 1;
        }
    }
    let need = threshold * n as f64;
    let thickness = row_count.iter().rev().take_while(|&&c| c as f64 >= need).count();
    let lead = n - thickness;
    let bandwidth = m.iter().filter(|&(i, _, _)| i < lead).map(|(i, j, _)| i - j).max().unwrap_or(0);
    let density_percent = 100.0 * m.full_nnz() as f64 / (n as f64 * n as f64);
    StructureStats { bandwidth, thickness, density_percent }
}
