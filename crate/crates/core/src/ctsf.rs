//! Compressed tile storage: a grid of fixed-size dense tiles in which only
//! tiles receiving at least one stored scalar are allocated, back to back in
//! one contiguous buffer.
//!
//! Tiles are square (`nt x nt`) and column-major inside. A scalar `(i, j)`
//! lives in tile `(i / nt, j / nt)` at local offset `(i % nt, j % nt)`. Only
//! the lower tile triangle is stored; diagonal tiles keep a full allocation
//! whose strictly upper local triangle is zero. When `nt` does not divide `n`
//! the last tile row/column is zero padded and the padded diagonal positions
//! hold `1.0`, so every diagonal tile stays positive definite.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::SymmetricCsc;

/// Tile-grid coordinate, ordered column-major (by `col`, then `row`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileCoord {
    pub row: usize,
    pub col: usize,
}

impl TileCoord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn is_diagonal(&self) -> bool {
        self.row == self.col
    }
}

impl Ord for TileCoord {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.col, self.row).cmp(&(other.col, other.row))
    }
}

impl PartialOrd for TileCoord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Occupancy of the lower tile triangle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileGrid {
    n: usize,
    nt: usize,
    tiles_per_side: usize,
    occupancy: BTreeSet<TileCoord>,
}

impl TileGrid {
    /// Grid with an explicit occupancy; diagonal tiles are always added.
    pub fn from_occupancy(n: usize, nt: usize, tiles: impl IntoIterator<Item = TileCoord>) -> Result<Self> {
        if nt < 1 {
            return Err(Error::InvalidArgument("tile size must be at least 1".into()));
        }
        let tiles_per_side = n.div_ceil(nt);
        let mut occupancy: BTreeSet<TileCoord> = (0..tiles_per_side).map(|k| TileCoord::new(k, k)).collect();
        for c in tiles {
            if c.row < c.col || c.row >= tiles_per_side {
                return Err(Error::InvalidArgument(format!(
                    "tile ({}, {}) outside the lower tile triangle",
                    c.row, c.col
                )));
            }
            occupancy.insert(c);
        }
        Ok(Self { n, nt, tiles_per_side, occupancy })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tile_size(&self) -> usize {
        self.nt
    }

    pub fn tiles_per_side(&self) -> usize {
        self.tiles_per_side
    }

    pub fn occupancy(&self) -> &BTreeSet<TileCoord> {
        &self.occupancy
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.occupancy.contains(&TileCoord::new(row, col))
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    /// Debug dump: one `row col` line per occupied tile, column-major.
    pub fn to_coordinate_list(&self) -> String {
        let mut s = String::new();
        for c in &self.occupancy {
            let _ = writeln!(s, "{} {}", c.row, c.col);
        }
        s
    }
}

/// Tiles receiving at least one stored scalar of `m` (diagonal tiles always).
pub fn build_tile_grid(m: &SymmetricCsc, nt: usize) -> Result<TileGrid> {
    if nt < 1 {
        return Err(Error::InvalidArgument("tile size must be at least 1".into()));
    }
    let mut tiles = Vec::new();
    for jt in 0..m.n().div_ceil(nt) {
        let mut rows = BTreeSet::new();
        for j in jt * nt..((jt + 1) * nt).min(m.n()) {
            rows.extend(m.column(j).0.iter().map(|&i| i / nt));
        }
        tiles.extend(rows.into_iter().map(|r| TileCoord::new(r, jt)));
    }
    TileGrid::from_occupancy(m.n(), nt, tiles)
}

/// A matrix in compressed tile storage.
#[derive(Debug, Clone, PartialEq)]
pub struct TiledMatrix {
    grid: TileGrid,
    storage: Vec<f64>,
    coords: Vec<TileCoord>,
    index: HashMap<TileCoord, usize>,
}

/// Packs `m` into tiles of side `nt`, allocating exactly the occupied tiles.
pub fn pack_ctsf(m: &SymmetricCsc, nt: usize) -> Result<TiledMatrix> {
    let grid = build_tile_grid(m, nt)?;
    TiledMatrix::pack_into(m, grid)
}

/// Converts back to scalar form, dropping padding and exact zeros.
pub fn unpack_to_csc(t: &TiledMatrix) -> Result<SymmetricCsc> {
    t.unpack()
}

impl TiledMatrix {
    /// Packs `m` into the tiles of `grid`, which may contain extra (e.g. fill)
    /// tiles but must cover every stored scalar.
    pub fn pack_into(m: &SymmetricCsc, grid: TileGrid) -> Result<Self> {
        if grid.n != m.n() {
            return Err(Error::InvalidArgument(format!("grid order {} != matrix order {}", grid.n, m.n())));
        }
        let mut t = Self::zeros(grid);
        let nt = t.grid.nt;
        for (i, j, v) in m.iter() {
            let c = TileCoord::new(i / nt, j / nt);
            let slot = *t.index.get(&c).ok_or_else(|| {
                Error::InvalidArgument(format!("entry ({i}, {j}) maps to unallocated tile ({}, {})", c.row, c.col))
            })?;
            t.storage[slot * nt * nt + (i % nt) + (j % nt) * nt] = v;
        }
        Ok(t)
    }

    /// All tiles of `grid` allocated and zero, with unit padding on the diagonal.
    pub fn zeros(grid: TileGrid) -> Self {
        let nt = grid.nt;
        let coords: Vec<TileCoord> = grid.occupancy.iter().copied().collect();
        let index = coords.iter().enumerate().map(|(s, &c)| (c, s)).collect();
        let storage = vec![0.0; coords.len() * nt * nt];
        let mut t = Self { grid, storage, coords, index };
        t.reset_padding();
        t
    }

    fn reset_padding(&mut self) {
        let (n, nt) = (self.grid.n, self.grid.nt);
        let last = self.grid.tiles_per_side.saturating_sub(1);
        let valid = n - last * nt;
        if let Some(&slot) = self.index.get(&TileCoord::new(last, last)) {
            for l in valid..nt {
                self.storage[slot * nt * nt + l + l * nt] = 1.0;
            }
        }
    }

    /// Grid describing the allocated tiles.
    pub fn grid(&self) -> &TileGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn tile_size(&self) -> usize {
        self.grid.nt
    }

    pub fn tile_count(&self) -> usize {
        self.coords.len()
    }

    /// Allocated scalars (`tile_count * nt^2`).
    pub fn storage_len(&self) -> usize {
        self.storage.len()
    }

    pub fn storage(&self) -> &[f64] {
        &self.storage
    }

    pub fn coords(&self) -> &[TileCoord] {
        &self.coords
    }

    pub fn slot(&self, c: TileCoord) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn tile(&self, row: usize, col: usize) -> Option<&[f64]> {
        self.slot(TileCoord::new(row, col)).map(|s| self.tile_at(s))
    }

    pub fn tile_mut(&mut self, row: usize, col: usize) -> Option<&mut [f64]> {
        let s = self.slot(TileCoord::new(row, col))?;
        Some(self.tile_at_mut(s))
    }

    pub fn tile_at(&self, slot: usize) -> &[f64] {
        let len = self.grid.nt * self.grid.nt;
        &self.storage[slot * len..(slot + 1) * len]
    }

    pub fn tile_at_mut(&mut self, slot: usize) -> &mut [f64] {
        let len = self.grid.nt * self.grid.nt;
        &mut self.storage[slot * len..(slot + 1) * len]
    }

    /// Scalar `(i, j)` of the stored lower triangle (mirrored for `i < j`).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let nt = self.grid.nt;
        match self.tile(i / nt, j / nt) {
            Some(t) => t[(i % nt) + (j % nt) * nt],
            None => 0.0,
        }
    }

    /// Re-allocates storage so that every tile of `tiles` exists; new tiles
    /// are zero. Existing contents are kept.
    pub fn with_tiles(self, tiles: impl IntoIterator<Item = TileCoord>) -> Result<Self> {
        let extra: Vec<TileCoord> = tiles.into_iter().filter(|c| !self.index.contains_key(c)).collect();
        if extra.is_empty() {
            return Ok(self);
        }
        let grid = TileGrid::from_occupancy(self.grid.n, self.grid.nt, self.coords.iter().copied().chain(extra))?;
        let mut out = Self::zeros(grid);
        for (slot, &c) in self.coords.iter().enumerate() {
            let dst = out.index[&c];
            out.tile_at_mut(dst).copy_from_slice(self.tile_at(slot));
        }
        Ok(out)
    }

    pub fn unpack(&self) -> Result<SymmetricCsc> {
        let (n, nt) = (self.grid.n, self.grid.nt);
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        let mut first = 0;
        for jt in 0..self.grid.tiles_per_side {
            let mut last = first;
            while last < self.coords.len() && self.coords[last].col == jt {
                last += 1;
            }
            for lc in 0..nt {
                let j = jt * nt + lc;
                if j >= n {
                    break;
                }
                for slot in first..last {
                    let c = self.coords[slot];
                    let tile = self.tile_at(slot);
                    let start = if c.is_diagonal() { lc } else { 0 };
                    for lr in start..nt {
                        let i = c.row * nt + lr;
                        if i >= n {
                            break;
                        }
                        let v = tile[lr + lc * nt];
                        if v != 0.0 {
                            row_idx.push(i);
                            values.push(v);
                        }
                    }
                }
                col_ptr.push(row_idx.len());
            }
            first = last;
        }
        SymmetricCsc::new(n, col_ptr, row_idx, values)
    }

    pub(crate) fn raw(&mut self) -> RawTiles {
        RawTiles::new(&mut self.storage, self.grid.nt * self.grid.nt)
    }
}

/// Unchecked shared view of a tile buffer for concurrent single-writer access.
///
/// The scheduler's ownership rules guarantee that a tile is written by one
/// worker at a time and read only after its completion flag is published.
#[derive(Clone, Copy)]
pub(crate) struct RawTiles {
    ptr: *mut f64,
    tile_len: usize,
    count: usize,
}

unsafe impl Send for RawTiles {}
unsafe impl Sync for RawTiles {}

impl RawTiles {
    pub(crate) fn new(buf: &mut [f64], tile_len: usize) -> Self {
        Self { ptr: buf.as_mut_ptr(), tile_len, count: buf.len() / tile_len.max(1) }
    }

    /// # Safety
    /// No other thread may be writing tile `slot` for the lifetime `'a`.
    pub(crate) unsafe fn tile<'a>(&self, slot: usize) -> &'a [f64] {
        assert!(slot < self.count);
        std::slice::from_raw_parts(self.ptr.add(slot * self.tile_len), self.tile_len)
    }

    /// # Safety
    /// The caller must be the only thread accessing tile `slot` for `'a`.
    #[allow(clippy::mut_from_ref)]
    pub(crate) unsafe fn tile_mut<'a>(&self, slot: usize) -> &'a mut [f64] {
        assert!(slot < self.count);
        std::slice::from_raw_parts_mut(self.ptr.add(slot * self.tile_len), self.tile_len)
    }
}
