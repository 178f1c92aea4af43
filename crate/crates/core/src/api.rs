//! End-to-end factorization: ordering, packing, planning, numeric phase, and
//! the solves that use the factor.

use std::fmt;
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::ctsf::{build_tile_grid, TileGrid, TiledMatrix};
use crate::error::{Error, Result};
use crate::matcore::{structure_stats, AdjacencyGraph, SymmetricCsc, DEFAULT_THICKNESS_THRESHOLD};
use crate::ordering::{
    adaptable_nd, min_degree, partial_rcm, select_ordering_detailed, symbolic_fill_count, FillReport, Permutation,
};
use crate::scheduler::{factorize_parallel_with, ExecOptions, FactorStats, TraceRecord};
use crate::symbolic::{
    build_task_table, plan_tree_reduction, plan_tree_reduction_with_threshold, tile_symbolic_factorize, ReductionPlan,
    TileSymbolic,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingPolicy {
    /// Partial RCM and adaptable ND, each adopted only if it lowers fill.
    #[default]
    Auto,
    Identity,
    #[serde(rename = "rcm")]
    PartialRcm,
    #[serde(rename = "amd")]
    MinDegree,
    #[serde(rename = "nd")]
    AdaptableNd,
}

impl OrderingPolicy {
    pub fn name(self) -> &'static str {
        match self {
            OrderingPolicy::Auto => "auto",
            OrderingPolicy::Identity => "identity",
            OrderingPolicy::PartialRcm => "rcm",
            OrderingPolicy::MinDegree => "amd",
            OrderingPolicy::AdaptableNd => "nd",
        }
    }
}

impl fmt::Display for OrderingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => OrderingPolicy::Auto,
            "identity" | "none" => OrderingPolicy::Identity,
            "rcm" | "partial-rcm" => OrderingPolicy::PartialRcm,
            "amd" | "md" | "min-degree" => OrderingPolicy::MinDegree,
            "nd" | "adaptable-nd" => OrderingPolicy::AdaptableNd,
            _ => return Err(Error::InvalidArgument(format!("unknown ordering '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionPolicy {
    /// Reduce chains of at least twice the worker count.
    #[default]
    Auto,
    /// Reduce every chain at least as long as the worker count.
    On,
    Off,
}

impl ReductionPolicy {
    pub fn name(self) -> &'static str {
        match self {
            ReductionPolicy::Auto => "auto",
            ReductionPolicy::On => "on",
            ReductionPolicy::Off => "off",
        }
    }

    pub fn plan(self, s: &TileSymbolic, workers: usize) -> ReductionPlan {
        match self {
            ReductionPolicy::Auto => plan_tree_reduction(s, workers),
            ReductionPolicy::On => plan_tree_reduction_with_threshold(s, workers, workers),
            ReductionPolicy::Off => ReductionPlan::empty(workers),
        }
    }
}

impl fmt::Display for ReductionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReductionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => ReductionPolicy::Auto,
            "on" => ReductionPolicy::On,
            "off" => ReductionPolicy::Off,
            _ => return Err(Error::InvalidArgument(format!("unknown reduction policy '{s}'"))),
        })
    }
}

pub const DEFAULT_TILE_SIZE: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorOptions {
    pub tile_size: usize,
    pub workers: usize,
    pub ordering: OrderingPolicy,
    pub reduction: ReductionPolicy,
    /// Record a per-kernel trace.
    pub trace: bool,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            tile_size: DEFAULT_TILE_SIZE,
            workers: thread::available_parallelism().map_or(1, |n| n.get()),
            ordering: OrderingPolicy::Auto,
            reduction: ReductionPolicy::Auto,
            trace: false,
        }
    }
}

impl FactorOptions {
    pub fn with_tile_size(mut self, nt: usize) -> Self {
        self.tile_size = nt;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_ordering(mut self, p: OrderingPolicy) -> Self {
        self.ordering = p;
        self
    }

    pub fn with_reduction(mut self, r: ReductionPolicy) -> Self {
        self.reduction = r;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 {
            return Err(Error::InvalidArgument("tile size must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("at least one worker is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub ordering: Duration,
    pub packing: Duration,
    pub symbolic: Duration,
    pub numeric: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.ordering + self.packing + self.symbolic + self.numeric
    }
}

/// Chosen permutation with its symbolic fill.
#[derive(Debug, Clone)]
pub struct OrderingChoice {
    pub permutation: Permutation,
    pub fill: FillReport,
    pub identity_fill: FillReport,
    /// Which ordering was adopted (`identity` when no candidate helped).
    pub name: &'static str,
}

/// Picks a permutation for `m` under `policy` from symbolic counts alone.
/// Explicit policies are applied as requested; `Auto` keeps the natural
/// order unless a candidate strictly lowers the factor size.
pub fn choose_ordering(m: &SymmetricCsc, policy: OrderingPolicy) -> Result<OrderingChoice> {
    let g = AdjacencyGraph::from_csc(m);
    let stats = structure_stats(m);
    let explicit = |p: Permutation, name| {
        let fill = symbolic_fill_count(&g, &p);
        let identity_fill = symbolic_fill_count(&g, &Permutation::identity(m.n()));
        Ok(OrderingChoice { permutation: p, fill, identity_fill, name })
    };
    match policy {
        OrderingPolicy::Identity => explicit(Permutation::identity(m.n()), "identity"),
        OrderingPolicy::PartialRcm => explicit(partial_rcm(&g, DEFAULT_THICKNESS_THRESHOLD)?, "rcm"),
        OrderingPolicy::MinDegree => explicit(min_degree(&g), "amd"),
        OrderingPolicy::AdaptableNd => explicit(adaptable_nd(&g, &stats, 1), "nd"),
        OrderingPolicy::Auto => {
            let rcm = partial_rcm(&g, DEFAULT_THICKNESS_THRESHOLD)?;
            // Dissect the RCM-banded matrix as well as the input itself.
            let banded = m.permute(&rcm)?;
            let nd_banded =
                adaptable_nd(&AdjacencyGraph::from_csc(&banded), &structure_stats(&banded), 1).compose(&rcm)?;
            let nd = adaptable_nd(&g, &stats, 1);
            let names = ["rcm", "nd", "rcm+nd"];
            let sel = select_ordering_detailed(&g, &[rcm, nd, nd_banded]);
            Ok(OrderingChoice {
                name: sel.chosen.map_or("identity", |i| names[i]),
                permutation: sel.permutation,
                fill: sel.fill,
                identity_fill: sel.identity_fill,
            })
        }
    }
}

/// A completed factorization `P A Pᵀ = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct FactorContext {
    ordering: OrderingChoice,
    factor: TiledMatrix,
    symbolic: TileSymbolic,
    stats: FactorStats,
    timings: Timings,
    trace: Option<Vec<TraceRecord>>,
    options: FactorOptions,
}

/// Orders, packs, plans and factorizes `m`.
pub fn factorize(m: &SymmetricCsc, opts: &FactorOptions) -> Result<FactorContext> {
    opts.validate()?;
    let t0 = Instant::now();
    let ordering = choose_ordering(m, opts.ordering)?;
    let t1 = Instant::now();
    let permuted = m.permute(&ordering.permutation)?;
    let input_grid = build_tile_grid(&permuted, opts.tile_size)?;
    let t2 = Instant::now();
    let symbolic = tile_symbolic_factorize(&input_grid);
    let tt = build_task_table(&symbolic, opts.workers);
    let plan = opts.reduction.plan(&symbolic, opts.workers);
    let grid = TileGrid::from_occupancy(m.n(), opts.tile_size, symbolic.targets())?;
    let t3 = Instant::now();
    // Packing into the factor grid allocates the fill tiles up front.
    let mut factor = TiledMatrix::pack_into(&permuted, grid)?;
    let t4 = Instant::now();
    let result = factorize_parallel_with(&mut factor, &tt, &plan, &ExecOptions { trace: opts.trace })?;
    let t5 = Instant::now();
    Ok(FactorContext {
        ordering,
        factor,
        symbolic,
        stats: result.stats,
        timings: Timings { ordering: t1 - t0, packing: (t2 - t1) + (t4 - t3), symbolic: t3 - t2, numeric: t5 - t4 },
        trace: result.trace,
        options: *opts,
    })
}

/// Factorizes independent problems concurrently, each on its own pool of
/// `opts.workers` threads. One failure does not stop the others.
pub fn factorize_many(problems: &[(&SymmetricCsc, FactorOptions)]) -> Vec<Result<FactorContext>> {
    if let [(m, opts)] = problems {
        return vec![factorize(m, opts)];
    }
    thread::scope(|sc| {
        let handles: Vec<_> = problems.iter().map(|(m, opts)| sc.spawn(move || factorize(m, opts))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p))).collect()
    })
}

/// Splits `total` workers into `parts` near-equal pools of at least one.
pub fn split_workers(total: usize, parts: usize) -> Vec<usize> {
    if parts == 0 {
        return Vec::new();
    }
    let total = total.max(parts);
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

impl FactorContext {
    pub fn n(&self) -> usize {
        self.factor.n()
    }

    pub fn permutation(&self) -> &Permutation {
        &self.ordering.permutation
    }

    pub fn ordering(&self) -> &OrderingChoice {
        &self.ordering
    }

    pub fn fill(&self) -> &FillReport {
        &self.ordering.fill
    }

    /// `L` in tile storage (permuted frame).
    pub fn factor(&self) -> &TiledMatrix {
        &self.factor
    }

    pub fn symbolic(&self) -> &TileSymbolic {
        &self.symbolic
    }

    pub fn stats(&self) -> &FactorStats {
        &self.stats
    }

    pub fn timings(&self) -> &Timings {
        &self.timings
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn options(&self) -> &FactorOptions {
        &self.options
    }

    /// `L` as a scalar lower-triangular matrix (permuted frame).
    pub fn factor_csc(&self) -> Result<SymmetricCsc> {
        self.factor.unpack()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::InvalidArgument(format!("right-hand side of length {} for order {n}", b.len())));
        }
        let nt = self.factor.tile_size();
        let tiles = self.symbolic.tiles_per_side();
        let mut y = self.permutation().apply(b);
        y.resize(tiles * nt, 0.0);
        let tile = |m: usize, k: usize| self.factor.tile(m, k).expect("factor tile allocated");
        for k in 0..tiles {
            let (head, rest) = y.split_at_mut((k + 1) * nt);
            let yk = &mut head[k * nt..];
            lower_solve(tile(k, k), yk, nt);
            for &m in self.symbolic.rows_below(k) {
                let l = tile(m, k);
                let ym = &mut rest[(m - k - 1) * nt..(m - k) * nt];
                for (c, &v) in yk.iter().enumerate() {
                    if v != 0.0 {
                        for (dst, &lv) in ym.iter_mut().zip(&l[c * nt..(c + 1) * nt]) {
                            *dst -= lv * v;
                        }
                    }
                }
            }
        }
        for k in (0..tiles).rev() {
            let (head, rest) = y.split_at_mut((k + 1) * nt);
            let yk = &mut head[k * nt..];
            for &m in self.symbolic.rows_below(k) {
                let l = tile(m, k);
                let ym = &rest[(m - k - 1) * nt..(m - k) * nt];
                for (c, dst) in yk.iter_mut().enumerate() {
                    *dst -= l[c * nt..(c + 1) * nt].iter().zip(ym).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            upper_solve(tile(k, k), yk, nt);
        }
        y.truncate(n);
        Ok(self.permutation().apply_inverse(&y))
    }

    /// `log det A`.
    pub fn logdet(&self) -> f64 {
        let nt = self.factor.tile_size();
        (0..self.n())
            .map(|i| {
                let t = self.factor.tile(i / nt, i / nt).expect("diagonal tile");
                t[(i % nt) * (nt + 1)].ln()
            })
            .sum::<f64>()
            * 2.0
    }

    /// `‖A − P⁻¹ L Lᵀ P⁻ᵀ‖_F / ‖A‖_F` for the matrix this context factorized.
    pub fn residual(&self, a: &SymmetricCsc) -> Result<f64> {
        let l = self.factor_csc()?;
        relative_residual(a, &l, self.permutation())
    }
}

/// Forward substitution with a lower-triangular column-major tile.
fn lower_solve(l: &[f64], y: &mut [f64], nt: usize) {
    for c in 0..nt {
        let v = y[c] / l[c + c * nt];
        y[c] = v;
        if v != 0.0 {
            for r in c + 1..nt {
                y[r] -= l[r + c * nt] * v;
            }
        }
    }
}

/// Back substitution with the transpose of a lower-triangular tile.
fn upper_solve(l: &[f64], y: &mut [f64], nt: usize) {
    for c in (0..nt).rev() {
        let s: f64 = (c + 1..nt).map(|r| l[r + c * nt] * y[r]).sum();
        y[c] = (y[c] - s) / l[c + c * nt];
    }
}

/// Relative Frobenius error of `L Lᵀ` against `P A Pᵀ`, computed column by
/// column from the scalar entries of `L` (the norm is permutation
/// invariant, so this equals the error in the original frame).
pub fn relative_residual(a: &SymmetricCsc, l: &SymmetricCsc, p: &Permutation) -> Result<f64> {
    let n = a.n();
    if l.n() != n {
        return Err(Error::InvalidArgument("factor and matrix orders differ".into()));
    }
    let b = a.permute(p)?;
    // Rows of L: row_start/row_cols/row_vals (CSR of the lower triangle).
    let mut row_ptr = vec![0usize; n + 1];
    for (i, _, _) in l.iter() {
        row_ptr[i + 1] += 1;
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    let mut fill = row_ptr.clone();
    let mut cols = vec![0usize; l.nnz()];
    let mut vals = vec![0.0; l.nnz()];
    for (i, j, v) in l.iter() {
        cols[fill[i]] = j;
        vals[fill[i]] = v;
        fill[i] += 1;
    }
    let mut acc = vec![0.0; n];
    let mut mark = vec![usize::MAX; n];
    let mut touched = Vec::new();
    let mut err2 = 0.0;
    for j in 0..n {
        // Column j of L Lᵀ on and below the diagonal: Σ_k L[j,k] L[:,k].
        touched.clear();
        for e in row_ptr[j]..row_ptr[j + 1] {
            let (k, ljk) = (cols[e], vals[e]);
            let (rows, lv) = l.column(k);
            let start = rows.partition_point(|&r| r < j);
            for (&i, &lik) in rows[start..].iter().zip(&lv[start..]) {
                if mark[i] != j {
                    mark[i] = j;
                    acc[i] = 0.0;
                    touched.push(i);
                }
                acc[i] += ljk * lik;
            }
        }
        let (rows, bv) = b.column(j);
        for (&i, &v) in rows.iter().zip(bv) {
            if mark[i] != j {
                mark[i] = j;
                acc[i] = 0.0;
                touched.push(i);
            }
            acc[i] -= v;
        }
        for &i in &touched {
            let w = if i == j { 1.0 } else { 2.0 };
            err2 += w * acc[i] * acc[i];
        }
    }
    let norm = a.frobenius_norm();
    Ok(if norm == 0.0 { err2.sqrt() } else { err2.sqrt() / norm })
}
