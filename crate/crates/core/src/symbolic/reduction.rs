use std::ops::Range;

use serde::Serialize;

use super::TileSymbolic;
use crate::ctsf::TileCoord;

/// Private accumulator rings per worker. Group `j` uses ring `j % RING`, and
/// may only start once group `j - RING` has been folded into its target.
const RING: usize = 2;

/// Minimum chain length for a tile to be reduced across `workers`.
pub fn reduction_threshold(workers: usize) -> usize {
    2 * workers
}

/// Splits `0..len` into `parts` contiguous ranges whose sizes differ by at most one.
pub fn balanced_chunks(len: usize, parts: usize) -> Vec<Range<usize>> {
    let (q, r) = (len / parts, len % parts);
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let end = start + q + usize::from(i < r);
            let c = start..end;
            start = end;
            c
        })
        .collect()
}

/// Leaves folded into `leaf` by a balanced binary tree over `leaves`, in order.
///
/// Round `s = 1, 2, 4, ...` adds leaf `r + s` into every `r` divisible by
/// `2s`. A leaf stops combining at the round where it is itself consumed.
pub fn combine_partners(leaf: usize, leaves: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut s = 1;
    while s < leaves && (leaf == 0 || s < (leaf & leaf.wrapping_neg())) {
        if leaf + s < leaves {
            out.push(leaf + s);
        }
        s *= 2;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CombineStep {
    pub round: usize,
    /// Leaf receiving the sum.
    pub dst: usize,
    pub src: usize,
}

/// Reduction of one accumulation chain across all workers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReducedTile {
    pub target: TileCoord,
    /// Source columns of the chain, ascending.
    pub accumulations: Vec<usize>,
    /// Worker of each leaf; leaf 0 is the tile owner.
    pub participants: Vec<usize>,
    /// Index ranges into `accumulations`, one per leaf.
    pub chunks: Vec<Range<usize>>,
    pub combine: Vec<CombineStep>,
    pub ring_slot: usize,
}

impl ReducedTile {
    pub fn leaves(&self) -> usize {
        self.participants.len()
    }

    pub fn depth(&self) -> usize {
        self.combine.iter().map(|c| c.round + 1).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ReductionPlan {
    pub workers: usize,
    pub ring: usize,
    /// Reduced tiles in global target order.
    pub tiles: Vec<ReducedTile>,
}

impl ReductionPlan {
    pub fn empty(workers: usize) -> Self {
        ReductionPlan { workers, ring: RING, tiles: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn find(&self, target: TileCoord) -> Option<usize> {
        self.tiles.iter().position(|t| t.target == target)
    }

    /// Private tiles each worker needs.
    pub fn private_slots(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.ring * self.workers
        }
    }
}

/// Reduces every chain of at least `2 * workers` accumulations.
pub fn plan_tree_reduction(s: &TileSymbolic, workers: usize) -> ReductionPlan {
    plan_tree_reduction_with_threshold(s, workers, reduction_threshold(workers))
}

/// Reduces every chain of at least `min_chain` accumulations.
/// With fewer than two workers there is nothing to split.
pub fn plan_tree_reduction_with_threshold(s: &TileSymbolic, workers: usize, min_chain: usize) -> ReductionPlan {
    let mut plan = ReductionPlan::empty(workers);
    if workers < 2 {
        return plan;
    }
    let min_chain = min_chain.max(workers);
    for (ordinal, target) in s.targets().enumerate() {
        if s.accum_count(target) < min_chain {
            continue;
        }
        let owner = ordinal % workers;
        let accumulations = s.accumulations(target);
        let combine = (0..workers)
            .flat_map(|dst| {
                combine_partners(dst, workers).into_iter().map(move |src| CombineStep {
                    round: (src - dst).trailing_zeros() as usize,
                    dst,
                    src,
                })
            })
            .collect::<Vec<_>>();
        let mut combine = combine;
        combine.sort_by_key(|c| (c.round, c.dst));
        plan.tiles.push(ReducedTile {
            target,
            chunks: balanced_chunks(accumulations.len(), workers),
            accumulations,
            participants: (0..workers).map(|r| (owner + r) % workers).collect(),
            combine,
            ring_slot: plan.tiles.len() % RING,
        });
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctsf::TileGrid;
    use crate::symbolic::tile_symbolic_factorize;
    use proptest::prelude::*;

    /// Tile arrowhead: diagonal plus a dense last tile row, so the last
    /// diagonal tile accumulates `t - 1` SYRKs.
    fn arrow(t: usize) -> TileSymbolic {
        let g = TileGrid::from_occupancy(t, 1, (0..t - 1).map(|c| TileCoord::new(t - 1, c))).unwrap();
        tile_symbolic_factorize(&g)
    }

    #[test]
    fn below_threshold_not_reduced() {
        assert!(plan_tree_reduction(&arrow(6), 4).is_empty());
    }

    #[test]
    fn two_workers_four_accumulations() {
        let plan = plan_tree_reduction(&arrow(5), 2);
        assert_eq!(plan.len(), 1);
        let r = &plan.tiles[0];
        assert_eq!(r.target, TileCoord::new(4, 4));
        assert_eq!(r.chunks, vec![0..2, 2..4]);
        assert_eq!(r.combine.len(), 1);
    }

    #[test]
    fn hundred_accumulations_four_workers() {
        let plan = plan_tree_reduction(&arrow(101), 4);
        let r = &plan.tiles[0];
        assert!(r.chunks.iter().all(|c| c.len() == 25));
        assert_eq!(r.depth(), 2);
        assert_eq!(r.combine.len(), 3);
    }

    #[test]
    fn threshold_boundaries() {
        for p in 2..6 {
            for (len, reduced) in [(2 * p - 1, false), (2 * p, true), (2 * p + 1, true)] {
                let plan = plan_tree_reduction(&arrow(len + 1), p);
                assert_eq!(!plan.is_empty(), reduced, "P={p} len={len}");
            }
        }
    }

    #[test]
    fn owner_is_leaf_zero() {
        let s = arrow(9);
        let plan = plan_tree_reduction(&s, 3);
        let ordinal = s.targets().position(|c| c == plan.tiles[0].target).unwrap();
        assert_eq!(plan.tiles[0].participants[0], ordinal % 3);
        let mut p = plan.tiles[0].participants.clone();
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2]);
    }

    /// Follows the combine steps on sets of contribution indices.
    fn evaluate(r: &ReducedTile) -> Vec<usize> {
        let mut sums: Vec<Vec<usize>> = r.chunks.iter().map(|c| c.clone().collect()).collect();
        for step in &r.combine {
            let src = std::mem::take(&mut sums[step.src]);
            sums[step.dst].extend(src);
        }
        let mut out = std::mem::take(&mut sums[0]);
        assert!(sums.iter().all(Vec::is_empty));
        out.sort_unstable();
        out
    }

    proptest! {
        #[test]
        fn chunks_partition(len in 0usize..500, parts in 1usize..33) {
            let chunks = balanced_chunks(len, parts);
            prop_assert_eq!(chunks.len(), parts);
            prop_assert_eq!(chunks[0].start, 0);
            prop_assert_eq!(chunks[parts - 1].end, len);
            for w in chunks.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            let (lo, hi) = (chunks.iter().map(|c| c.len()).min().unwrap(), chunks.iter().map(|c| c.len()).max().unwrap());
            prop_assert!(hi - lo <= 1);
        }

        #[test]
        fn combine_tree_covers_every_contribution(t in 2usize..80, workers in 2usize..12) {
            let plan = plan_tree_reduction_with_threshold(&arrow(t), workers, 0);
            for r in &plan.tiles {
                prop_assert_eq!(r.leaves(), workers);
                prop_assert_eq!(r.combine.len(), workers - 1);
                prop_assert_eq!(evaluate(r), (0..r.accumulations.len()).collect::<Vec<_>>());
                // A leaf is consumed only after it has finished its own rounds.
                for c in &r.combine {
                    let last_own = r.combine.iter().filter(|d| d.dst == c.src).map(|d| d.round).max();
                    prop_assert!(last_own.map_or(true, |lr| lr < c.round));
                }
            }
        }
    }
}
