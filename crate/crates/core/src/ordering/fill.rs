use serde::{Deserialize, Serialize};

use super::Permutation;
use crate::matcore::AdjacencyGraph;

/// Lower-triangle nonzero counts before and after symbolic elimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillReport {
    pub nnz_original: usize,
    pub nnz_factor: usize,
    pub fill_in: usize,
}

const NONE: usize = usize::MAX;

/// Elimination tree of the permuted pattern, indexed by new position.
/// Roots have parent `usize::MAX`.
pub fn elimination_tree(g: &AdjacencyGraph, p: &Permutation) -> Vec<usize> {
    row_subtrees(g, p).0
}

/// Exact nonzero count of the Cholesky factor of `P A Pᵀ`.
///
/// Each row `k` of `L` is the union of the elimination-tree paths from the
/// nonzeros `A[k, i], i < k` up to `k`; walking those paths with a visit
/// marker counts every factor entry exactly once without storing `L`.
pub fn symbolic_fill_count(g: &AdjacencyGraph, p: &Permutation) -> FillReport {
    let n = g.n();
    assert_eq!(p.len(), n, "permutation length");
    let (_, col_counts) = row_subtrees(g, p);
    let nnz_original = n + g.edge_count();
    let nnz_factor = n + col_counts.iter().sum::<usize>();
    FillReport { nnz_original, nnz_factor, fill_in: nnz_factor - nnz_original }
}

fn row_subtrees(g: &AdjacencyGraph, p: &Permutation) -> (Vec<usize>, Vec<usize>) {
    let n = g.n();
    let (fwd, inv) = (p.forward(), p.inverse());
    let mut parent = vec![NONE; n];
    let mut flag = vec![NONE; n];
    let mut counts = vec![0usize; n];
    for k in 0..n {
        flag[k] = k;
        for &u in g.neighbors(inv[k]) {
            let mut i = fwd[u];
            if i > k {
                continue;
            }
            while flag[i] != k {
                if parent[i] == NONE {
                    parent[i] = k;
                }
                counts[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }
    (parent, counts)
}
