use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::Permutation;
use crate::matcore::AdjacencyGraph;

/// Exact greedy minimum-degree ordering.
///
/// Works on the explicit elimination graph: eliminating a vertex turns its
/// remaining neighbourhood into a clique. Ties are broken by smallest
/// original index. This is the reference against which approximate degree
/// schemes are usually judged; ordering quality is the same, only speed
/// differs.
pub fn min_degree(g: &AdjacencyGraph) -> Permutation {
    let n = g.n();
    let mut adj: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v).to_vec()).collect();
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();

    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        order.push(v);
        let clique = std::mem::take(&mut adj[v]);
        for &u in &clique {
            merged.clear();
            merge_clique(&adj[u], &clique, u, v, &mut merged);
            std::mem::swap(&mut adj[u], &mut merged);
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    Permutation::from_order(order).expect("every vertex eliminated once")
}

/// `out = (a ∪ clique) \ {u, v}` for sorted inputs.
fn merge_clique(a: &[usize], clique: &[usize], u: usize, v: usize, out: &mut Vec<usize>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < clique.len() {
        let x = match (a.get(i), clique.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if x != u && x != v {
            out.push(x);
        }
    }
}
