//! Tile-level symbolic factorization and static work planning.

mod dag;
mod reduction;
mod tasks;

pub use dag::{dag_stats, DagStats, TaskDag};
pub use reduction::{
    balanced_chunks, combine_partners, plan_tree_reduction, plan_tree_reduction_with_threshold, reduction_threshold,
    CombineStep, ReducedTile, ReductionPlan,
};
pub use tasks::{build_task_table, enumerate_tasks, task_groups, Task, TaskGroup, TaskKind, TaskTable};

use std::collections::{BTreeMap, BTreeSet};

use crate::ctsf::{TileCoord, TileGrid};

/// Nonzero-tile structure of the factor `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileSymbolic {
    n: usize,
    nt: usize,
    tiles: usize,
    /// Per tile column `k`: rows `m > k` with `(m, k)` in the factor.
    below: Vec<Vec<usize>>,
    /// Per tile row `m`: columns `n < m` with `(m, n)` in the factor.
    left: Vec<Vec<usize>>,
    input_tiles: usize,
    accum_count: BTreeMap<TileCoord, usize>,
}

/// Symbolic Cholesky on the tile graph: eliminating tile column `k` joins
/// every pair of its lower neighbours.
pub fn tile_symbolic_factorize(g: &TileGrid) -> TileSymbolic {
    let t = g.tiles_per_side();
    let mut below: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); t];
    for c in g.occupancy() {
        if c.row > c.col {
            below[c.col].insert(c.row);
        }
    }
    let mut cols: Vec<Vec<usize>> = Vec::with_capacity(t);
    for k in 0..t {
        let rows: Vec<usize> = std::mem::take(&mut below[k]).into_iter().collect();
        for (a, &m) in rows.iter().enumerate() {
            for &r in &rows[a + 1..] {
                below[m].insert(r);
            }
        }
        cols.push(rows);
    }
    let mut left = vec![Vec::new(); t];
    for (k, rows) in cols.iter().enumerate() {
        for &m in rows {
            left[m].push(k);
        }
    }
    let mut accum_count = BTreeMap::new();
    for k in 0..t {
        accum_count.insert(TileCoord::new(k, k), left[k].len());
        for &m in &cols[k] {
            accum_count.insert(TileCoord::new(m, k), intersect_count(&left[m], &left[k]));
        }
    }
    TileSymbolic { n: g.n(), nt: g.tile_size(), tiles: t, below: cols, left, input_tiles: g.len(), accum_count }
}

fn intersect_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl TileSymbolic {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tile_size(&self) -> usize {
        self.nt
    }

    pub fn tiles_per_side(&self) -> usize {
        self.tiles
    }

    pub fn contains(&self, m: usize, k: usize) -> bool {
        m == k && k < self.tiles || m > k && self.below[k].binary_search(&m).is_ok()
    }

    /// Factor tiles in global order: by column, diagonal first, then rows ascending.
    pub fn targets(&self) -> impl Iterator<Item = TileCoord> + '_ {
        (0..self.tiles).flat_map(move |k| {
            std::iter::once(TileCoord::new(k, k)).chain(self.below[k].iter().map(move |&m| TileCoord::new(m, k)))
        })
    }

    pub fn factor_occupancy(&self) -> BTreeSet<TileCoord> {
        self.targets().collect()
    }

    pub fn factor_tile_count(&self) -> usize {
        self.tiles + self.below.iter().map(Vec::len).sum::<usize>()
    }

    /// Tiles of the factor that were empty in the input.
    pub fn fill_tile_count(&self) -> usize {
        self.factor_tile_count() - self.input_tiles
    }

    pub fn rows_below(&self, k: usize) -> &[usize] {
        &self.below[k]
    }

    pub fn cols_left(&self, m: usize) -> &[usize] {
        &self.left[m]
    }

    /// `{m : (m, k) or (k, m) nonzero}`, sorted, excluding `k` itself.
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.left[k].iter().chain(&self.below[k]).copied().collect();
        v.sort_unstable();
        v
    }

    /// Source columns `n` of the SYRK/GEMM updates into `target`, ascending.
    pub fn accumulations(&self, target: TileCoord) -> Vec<usize> {
        if target.is_diagonal() {
            self.left[target.col].clone()
        } else {
            intersect(&self.left[target.row], &self.left[target.col])
        }
    }

    pub fn accum_count(&self, target: TileCoord) -> usize {
        self.accum_count.get(&target).copied().unwrap_or(0)
    }

    pub fn accum_counts(&self) -> &BTreeMap<TileCoord, usize> {
        &self.accum_count
    }
}
