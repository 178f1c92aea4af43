use std::ops::Range;

use super::Permutation;
use crate::matcore::{AdjacencyGraph, StructureStats};

/// Arrowhead-aware nested dissection.
///
/// The leading `n - t` block (bandwidth `b`) is cut at its midpoint by a
/// separator of exactly `b` consecutive vertices, which is moved behind both
/// halves: `P1, P2, S`, followed by the untouched arrowhead tail. With a band
/// of width `b` no entry couples `P1` and `P2`. The same split is applied
/// recursively inside each half while levels remain and the part has more
/// than `4 b` vertices.
pub fn adaptable_nd(g: &AdjacencyGraph, stats: &StructureStats, max_levels: usize) -> Permutation {
    let n = g.n();
    let lead = n - stats.thickness.min(n);
    let mut order = Vec::with_capacity(n);
    dissect(0..lead, stats.bandwidth, max_levels, &mut order);
    order.extend(lead..n);
    Permutation::from_order(order).expect("dissection visits every vertex once")
}

fn dissect(part: Range<usize>, b: usize, levels: usize, order: &mut Vec<usize>) {
    if levels == 0 || b == 0 || part.len() <= 4 * b {
        order.extend(part);
        return;
    }
    let mid = part.start + part.len() / 2;
    let sep_end = (mid + b).min(part.end);
    dissect(part.start..mid, b, levels - 1, order);
    dissect(sep_end..part.end, b, levels - 1, order);
    order.extend(mid..sep_end);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(bandwidth: usize, thickness: usize) -> StructureStats {
        StructureStats { bandwidth, thickness, density_percent: 0.0 }
    }

    fn banded(n: usize, b: usize) -> AdjacencyGraph {
        let e: Vec<_> = (0..n).flat_map(|i| (1..=b).filter(move |d| i + d < n).map(move |d| (i + d, i))).collect();
        AdjacencyGraph::from_edges(n, &e)
    }

    #[test]
    fn one_level_split() {
        let g = banded(100, 5);
        let p = adaptable_nd(&g, &stats(5, 0), 1);
        let expected: Vec<usize> = (0..50).chain(55..100).chain(50..55).collect();
        assert_eq!(p.inverse(), &expected[..]);
        // No edge couples P1 = new [0, 50) with P2 = new [50, 95).
        for v in 0..100 {
            for &u in g.neighbors(v) {
                let (a, b) = (p.forward()[v], p.forward()[u]);
                assert!(!(a < 50 && (50..95).contains(&b)));
            }
        }
    }

    #[test]
    fn thickness_only_is_identity() {
        let g = banded(20, 0);
        assert!(adaptable_nd(&g, &stats(0, 5), 3).is_identity());
        assert!(adaptable_nd(&g, &stats(0, 0), 3).is_identity());
    }

    #[test]
    fn recursion_respects_threshold() {
        let g = banded(200, 5);
        let p = adaptable_nd(&g, &stats(5, 10), 2);
        // Leading 190 splits at 95; halves of 95 and 90 vertices split again.
        let lead = &p.inverse()[..190];
        assert_eq!(&lead[..47], &(0..47).collect::<Vec<_>>()[..]);
        assert_eq!(&lead[185..], &(95..100).collect::<Vec<_>>()[..]);
        assert_eq!(&p.inverse()[190..], &(190..200).collect::<Vec<_>>()[..]);
        let small = adaptable_nd(&g, &stats(60, 0), 4);
        assert!(small.is_identity());
    }
}
