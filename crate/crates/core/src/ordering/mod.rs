//! Fill-reducing orderings for arrowhead matrices and the symbolic fill
//! count used to accept or reject them.

mod fill;
mod min_degree;
mod nested;
mod rcm;

pub use fill::{elimination_tree, symbolic_fill_count, FillReport};
pub use min_degree::min_degree;
pub use nested::adaptable_nd;
pub use rcm::rcm;

use crate::error::{Error, Result};
use crate::matcore::AdjacencyGraph;

/// A bijection on `0..n`. `forward[old] = new`, `inverse[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let v: Vec<usize> = (0..n).collect();
        Self { forward: v.clone(), inverse: v }
    }

    /// From an old-to-new map.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let inverse = invert(&forward)?;
        Ok(Self { forward, inverse })
    }

    /// From an elimination order: `order[new] = old`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let forward = invert(&order)?;
        Ok(Self { forward, inverse: order })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `self ∘ inner`: maps `i` to `self(inner(i))`.
    pub fn compose(&self, inner: &Permutation) -> Result<Permutation> {
        if self.len() != inner.len() {
            return Err(Error::InvalidArgument("composing permutations of different lengths".into()));
        }
        Permutation::from_forward(inner.forward.iter().map(|&i| self.forward[i]).collect())
    }

    /// Whitespace-separated elimination order (`inverse`), one line.
    pub fn to_text(&self) -> String {
        let mut s = self.inverse.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        s.push('\n');
        s
    }

    /// Parses the format written by [`Permutation::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let order = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad permutation index '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_order(order)
    }

    /// Applies the permutation to a vector: `out[p(i)] = x[i]`.
    pub fn apply<T: Copy + Default>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); x.len()];
        for (i, &v) in x.iter().enumerate() {
            out[self.forward[i]] = v;
        }
        out
    }

    /// Inverse of [`Permutation::apply`]: `out[i] = y[p(i)]`.
    pub fn apply_inverse<T: Copy>(&self, y: &[T]) -> Vec<T> {
        self.forward.iter().map(|&p| y[p]).collect()
    }
}

fn invert(map: &[usize]) -> Result<Vec<usize>> {
    let n = map.len();
    let mut inv = vec![usize::MAX; n];
    for (i, &p) in map.iter().enumerate() {
        if p >= n || inv[p] != usize::MAX {
            return Err(Error::InvalidArgument(format!("not a permutation: index {p} at position {i}")));
        }
        inv[p] = i;
    }
    Ok(inv)
}

/// RCM that leaves the arrowhead alone: vertices whose closed neighbourhood
/// covers at least `threshold * n` vertices are moved, in index order, behind
/// an RCM ordering of the rest. Works on scrambled inputs where the dense
/// rows are not already trailing.
pub fn partial_rcm(g: &AdjacencyGraph, threshold: f64) -> Result<Permutation> {
    let n = g.n();
    let need = threshold * n as f64;
    let (dense, sparse): (Vec<usize>, Vec<usize>) = (0..n).partition(|&v| (g.degree(v) + 1) as f64 >= need && n > 1);
    let t = dense.len();
    let q = Permutation::from_order(sparse.into_iter().chain(dense).collect())?;
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|v| g.neighbors(v).iter().filter(move |&&u| u < v).map(move |&u| (v, u)))
        .map(|(a, b)| (q.forward[a], q.forward[b]))
        .collect();
    let r = rcm(&AdjacencyGraph::from_edges(n, &edges), t)?;
    r.compose(&q)
}

/// Outcome of [`select_ordering_detailed`].
#[derive(Debug, Clone)]
pub struct Selection {
    /// Index into the candidate list, `None` when identity was kept.
    pub chosen: Option<usize>,
    pub permutation: Permutation,
    pub fill: FillReport,
    pub identity_fill: FillReport,
}

/// Returns the candidate with the fewest factor nonzeros, keeping the identity
/// unless a candidate strictly improves on it.
pub fn select_ordering(g: &AdjacencyGraph, candidates: &[Permutation]) -> Permutation {
    select_ordering_detailed(g, candidates).permutation
}

pub fn select_ordering_detailed(g: &AdjacencyGraph, candidates: &[Permutation]) -> Selection {
    let identity = Permutation::identity(g.n());
    let identity_fill = symbolic_fill_count(g, &identity);
    let mut best = Selection { chosen: None, permutation: identity, fill: identity_fill, identity_fill };
    for (k, c) in candidates.iter().enumerate() {
        let f = symbolic_fill_count(g, c);
        if f.nnz_factor < best.fill.nnz_factor {
            best = Selection { chosen: Some(k), permutation: c.clone(), fill: f, identity_fill };
        }
    }
    best
}
