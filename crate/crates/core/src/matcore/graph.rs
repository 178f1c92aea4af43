use super::SymmetricCsc;

/// Undirected adjacency structure of a symmetric sparsity pattern (diagonal
/// excluded), neighbours sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    xadj: Vec<usize>,
    adj: Vec<usize>,
}

impl AdjacencyGraph {
    pub fn from_csc(m: &SymmetricCsc) -> Self {
        let n = m.n();
        let mut deg = vec![0usize; n];
        for (i, j, _) in m.iter() {
            if i != j {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        Self::build(n, deg, m.iter().filter(|e| e.0 != e.1).map(|(i, j, _)| (i, j)))
    }

    /// Builds a graph from an edge list; self loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut e: Vec<(usize, usize)> =
            edges.iter().filter(|(a, b)| a != b).map(|&(a, b)| (a.max(b), a.min(b))).collect();
        e.sort_unstable();
        e.dedup();
        let mut deg = vec![0usize; n];
        for &(a, b) in &e {
            assert!(a < n, "edge endpoint {a} out of range");
            deg[a] += 1;
            deg[b] += 1;
        }
        Self::build(n, deg, e.into_iter())
    }

    fn build(n: usize, deg: Vec<usize>, edges: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut xadj = vec![0usize; n + 1];
        for v in 0..n {
            xadj[v + 1] = xadj[v] + deg[v];
        }
        let mut next = xadj.clone();
        let mut adj = vec![0usize; xadj[n]];
        for (a, b) in edges {
            adj[next[a]] = b;
            next[a] += 1;
            adj[next[b]] = a;
            next[b] += 1;
        }
        for v in 0..n {
            adj[xadj[v]..xadj[v + 1]].sort_unstable();
        }
        Self { xadj, adj }
    }

    pub fn n(&self) -> usize {
        self.xadj.len() - 1
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.xadj[v]..self.xadj[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.xadj[v + 1] - self.xadj[v]
    }

    /// Number of undirected edges, i.e. strictly-lower stored entries.
    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }
}
