use std::collections::VecDeque;

use super::Permutation;
use crate::error::{Error, Result};
use crate::matcore::AdjacencyGraph;

/// Reverse Cuthill-McKee on the leading `n - pinned_tail` vertices.
///
/// The last `pinned_tail` vertices (the arrowhead) keep their positions.
/// `pinned_tail = 0` is plain RCM on the whole graph. Each connected component
/// is started from a pseudo-peripheral vertex found by repeated BFS from a
/// minimum-degree vertex; neighbours are enqueued by ascending degree, ties by
/// index.
pub fn rcm(g: &AdjacencyGraph, pinned_tail: usize) -> Result<Permutation> {
    let n = g.n();
    if pinned_tail > n {
        return Err(Error::InvalidArgument(format!("pinned tail {pinned_tail} exceeds order {n}")));
    }
    let lead = n - pinned_tail;
    let sub = Subgraph::new(g, lead);

    let mut by_degree: Vec<usize> = (0..lead).collect();
    by_degree.sort_by_key(|&v| (sub.degree[v], v));

    let mut placed = vec![false; lead];
    let mut order = Vec::with_capacity(n);
    let mut marks = Marks::new(lead);
    for &seed in &by_degree {
        if placed[seed] {
            continue;
        }
        let start = sub.pseudo_peripheral(seed, &mut marks);
        let begin = order.len();
        order.push(start);
        placed[start] = true;
        let mut head = begin;
        let mut nbrs = Vec::new();
        while head < order.len() {
            let v = order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(sub.neighbors(v).filter(|&u| !placed[u]));
            nbrs.sort_by_key(|&u| (sub.degree[u], u));
            for &u in &nbrs {
                placed[u] = true;
                order.push(u);
            }
        }
    }
    order.reverse();
    order.extend(lead..n);
    Permutation::from_order(order)
}

struct Subgraph<'a> {
    g: &'a AdjacencyGraph,
    lead: usize,
    degree: Vec<usize>,
}

impl<'a> Subgraph<'a> {
    fn new(g: &'a AdjacencyGraph, lead: usize) -> Self {
        let degree = (0..lead).map(|v| g.neighbors(v).iter().take_while(|&&u| u < lead).count()).collect();
        Self { g, lead, degree }
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let lead = self.lead;
        self.g.neighbors(v).iter().copied().take_while(move |&u| u < lead)
    }

    /// BFS level structure rooted at `root`; returns (depth, vertices of the last level).
    fn levels(&self, root: usize, marks: &mut Marks) -> (usize, Vec<usize>) {
        marks.reset();
        let mut queue = VecDeque::new();
        marks.set(root, 0);
        queue.push_back(root);
        let mut depth = 0;
        let mut last = vec![root];
        while let Some(v) = queue.pop_front() {
            let d = marks.get(v);
            if d > depth {
                depth = d;
                last.clear();
            }
            if d == depth && !last.contains(&v) {
                last.push(v);
            }
            for u in self.neighbors(v) {
                if !marks.is_set(u) {
                    marks.set(u, d + 1);
                    queue.push_back(u);
                }
            }
        }
        (depth, last)
    }

    fn pseudo_peripheral(&self, seed: usize, marks: &mut Marks) -> usize {
        let mut root = seed;
        let (mut depth, mut last) = self.levels(root, marks);
        loop {
            let candidate = *last.iter().min_by_key(|&&u| (self.degree[u], u)).unwrap();
            let (d, l) = self.levels(candidate, marks);
            if d > depth {
                root = candidate;
                depth = d;
                last = l;
            } else {
                return root;
            }
        }
    }
}

/// Generation-stamped BFS distances so repeated searches do not reallocate.
struct Marks {
    stamp: Vec<u32>,
    dist: Vec<usize>,
    current: u32,
}

impl Marks {
    fn new(n: usize) -> Self {
        Self { stamp: vec![0; n], dist: vec![0; n], current: 0 }
    }
    fn reset(&mut self) {
        self.current += 1;
    }
    fn is_set(&self, v: usize) -> bool {
        self.stamp[v] == self.current
    }
    fn set(&mut self, v: usize, d: usize) {
        self.stamp[v] = self.current;
        self.dist[v] = d;
    }
    fn get(&self, v: usize) -> usize {
        self.dist[v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::symbolic_fill_count;

    fn bandwidth(g: &AdjacencyGraph, p: &Permutation) -> usize {
        (0..g.n())
            .flat_map(|v| g.neighbors(v).iter().map(move |&u| (v, u)))
            .map(|(v, u)| p.forward()[v].abs_diff(p.forward()[u]))
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn path_gets_bandwidth_one() {
        // Of the 24 orderings of a 4-path, exactly the path order and its
        // reverse have bandwidth 1.
        let g = AdjacencyGraph::from_edges(4, &[(1, 0), (2, 1), (3, 2)]);
        let p = rcm(&g, 0).unwrap();
        assert_eq!(bandwidth(&g, &p), 1);
        assert!(p.inverse() == [0, 1, 2, 3] || p.inverse() == [3, 2, 1, 0]);
    }

    #[test]
    fn star_with_center_pinned() {
        let n = 6;
        let g = AdjacencyGraph::from_edges(n, &(0..n - 1).map(|i| (n - 1, i)).collect::<Vec<_>>());
        let p = rcm(&g, 1).unwrap();
        assert_eq!(p.forward()[n - 1], n - 1);
        assert_eq!(symbolic_fill_count(&g, &p).fill_in, 0);
    }

    #[test]
    fn pinned_tail_never_moves() {
        let n = 30;
        let mut edges: Vec<(usize, usize)> = (0..25).map(|i| ((i * 7) % 25, (i * 11 + 3) % 25)).collect();
        edges.extend((0..n).flat_map(|i| (25..n).map(move |t| (t, i))));
        let g = AdjacencyGraph::from_edges(n, &edges);
        let p = rcm(&g, 5).unwrap();
        for v in 25..n {
            assert_eq!(p.forward()[v], v);
        }
    }

    #[test]
    fn disconnected_and_isolated_vertices() {
        let g = AdjacencyGraph::from_edges(7, &[(1, 0), (4, 3)]);
        let p = rcm(&g, 0).unwrap();
        assert_eq!(p.len(), 7);
        assert!(rcm(&g, 8).is_err());
        assert!(rcm(&g, 7).unwrap().is_identity());
    }
}
