//! Numeric factorization executors.
//!
//! [`factorize_sequential`] runs the left-looking task order on one thread.
//! [`factorize_parallel`] runs a static [`TaskTable`] on a scoped worker pool:
//! each worker walks its own list, waits on the progress flags of the tiles a
//! task reads, and publishes a flag after every POTRF and TRSM. Tiles listed
//! in a [`ReductionPlan`] are instead accumulated in slices by all workers
//! into private tiles and folded together with GEADDs before the owner
//! finalizes them.

mod chain;
mod parallel;
mod progress;

pub use chain::{gemm_chain_sequential, gemm_chain_tree};
pub use parallel::{factorize_parallel, factorize_parallel_with};
pub use progress::ProgressTable;

use std::io::{self, Write};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::ctsf::{RawTiles, TileCoord, TileGrid, TiledMatrix};
use crate::error::{Error, Result};
use crate::kernels;
use crate::symbolic::{enumerate_tasks, Task, TaskKind, TileSymbolic};
use progress::Flags;

use crate::symbolic::TaskTable;

/// Trace code of tile additions.
pub const GEADD_CODE: u8 = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TaskCounts {
    pub potrf: usize,
    pub syrk: usize,
    pub trsm: usize,
    pub gemm: usize,
    pub geadd: usize,
}

impl TaskCounts {
    fn bump(&mut self, kind: TaskKind) {
        match kind {
            TaskKind::Potrf => self.potrf += 1,
            TaskKind::Syrk => self.syrk += 1,
            TaskKind::Trsm => self.trsm += 1,
            TaskKind::Gemm => self.gemm += 1,
        }
    }

    fn add(&mut self, o: &TaskCounts) {
        self.potrf += o.potrf;
        self.syrk += o.syrk;
        self.trsm += o.trsm;
        self.gemm += o.gemm;
        self.geadd += o.geadd;
    }

    /// Kernel invocations excluding GEADD.
    pub fn tasks(&self) -> usize {
        self.potrf + self.syrk + self.trsm + self.gemm
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct WorkerStats {
    pub counts: TaskCounts,
    pub busy: Duration,
    /// Time blocked on flags, including the final join.
    pub wait: Duration,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FactorStats {
    pub counts: TaskCounts,
    pub wall: Duration,
    pub workers: Vec<WorkerStats>,
    pub published_flags: usize,
    pub reduced_tiles: usize,
}

/// One executed kernel. `private` marks writes into a reduction accumulator
/// rather than a factor tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub worker: usize,
    #[serde(rename = "type")]
    pub kind: u8,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub start: u64,
    pub end: u64,
    pub private: bool,
}

#[derive(Debug, Clone, Default)]
pub struct FactorResult {
    pub stats: FactorStats,
    pub trace: Option<Vec<TraceRecord>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExecOptions {
    pub trace: bool,
}

/// Writes `worker,type,k,m,n,start,end,private` rows, times in nanoseconds.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "worker,type,k,m,n,start,end,private")?;
    for r in records {
        writeln!(w, "{},{},{},{},{},{},{},{}", r.worker, r.kind, r.k, r.m, r.n, r.start, r.end, u8::from(r.private))?;
    }
    Ok(())
}

/// Allocates any factor tile missing from `a` (fill tiles start at zero).
pub fn ensure_factor_tiles(a: &mut TiledMatrix, targets: impl IntoIterator<Item = TileCoord>) -> Result<()> {
    let missing: Vec<TileCoord> = targets.into_iter().filter(|&c| a.slot(c).is_none()).collect();
    if !missing.is_empty() {
        let empty = TileGrid::from_occupancy(0, 1, []).expect("empty grid");
        let old = std::mem::replace(a, TiledMatrix::zeros(empty));
        *a = old.with_tiles(missing)?;
    }
    Ok(())
}

/// A task with its tile slots resolved.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Step {
    task: Task,
    target: usize,
    /// `(k, k)` for TRSM, `(k, n)` for SYRK and GEMM; then `(m, n)` for GEMM.
    srcs: [usize; 2],
}

impl Step {
    pub(crate) fn resolve(a: &TiledMatrix, task: Task) -> Result<Self> {
        let slot = |c: TileCoord| {
            a.slot(c).ok_or_else(|| {
                Error::InvalidArgument(format!("task {task} needs unallocated tile ({}, {})", c.row, c.col))
            })
        };
        let target = slot(task.target())?;
        let srcs = match task.kind {
            TaskKind::Potrf => [target, target],
            TaskKind::Trsm => [slot(TileCoord::new(task.k, task.k))?, target],
            TaskKind::Syrk => [slot(TileCoord::new(task.k, task.n))?, target],
            TaskKind::Gemm => [slot(TileCoord::new(task.k, task.n))?, slot(TileCoord::new(task.m, task.n))?],
        };
        Ok(Step { task, target, srcs })
    }

    /// Slots (and flags) of the tiles this step reads.
    fn waits(&self) -> &[usize] {
        match self.task.kind {
            TaskKind::Potrf => &[],
            TaskKind::Trsm | TaskKind::Syrk => &self.srcs[..1],
            TaskKind::Gemm => &self.srcs,
        }
    }
}

/// Per-thread execution state.
pub(crate) struct Worker<'a> {
    id: usize,
    nt: usize,
    tiles: RawTiles,
    flags: &'a Flags,
    epoch: Instant,
    stats: WorkerStats,
    trace: Option<Vec<TraceRecord>>,
}

impl<'a> Worker<'a> {
    pub(crate) fn new(id: usize, nt: usize, tiles: RawTiles, flags: &'a Flags, epoch: Instant, trace: bool) -> Self {
        Worker { id, nt, tiles, flags, epoch, stats: WorkerStats::default(), trace: trace.then(Vec::new) }
    }

    pub(crate) fn wait(&mut self, flag: usize) -> Result<()> {
        if !self.flags.is_set(flag) {
            let t0 = Instant::now();
            let r = self.flags.wait(flag);
            self.stats.wait += t0.elapsed();
            r?;
        }
        Ok(())
    }

    pub(crate) fn record(&mut self, kind: u8, task: &Task, t0: Instant, private: bool) {
        let t1 = Instant::now();
        self.stats.busy += t1 - t0;
        if let Some(tr) = &mut self.trace {
            tr.push(TraceRecord {
                worker: self.id,
                kind,
                k: task.k,
                m: task.m,
                n: task.n,
                start: (t0 - self.epoch).as_nanos() as u64,
                end: (t1 - self.epoch).as_nanos() as u64,
                private,
            });
        }
    }

    /// Waits for the sources, runs the kernel into its factor tile and
    /// publishes finalized tiles.
    pub(crate) fn run(&mut self, s: &Step) -> Result<()> {
        for &w in s.waits() {
            self.wait(w)?;
        }
        let t0 = Instant::now();
        self.kernel(s, s.target, self.tiles)?;
        self.record(s.task.kind.code(), &s.task, t0, false);
        if s.task.publishes().is_some() {
            self.flags.set(s.target);
        }
        Ok(())
    }

    /// Runs an accumulation of `s` into tile `dst` of `out` (a private
    /// accumulator); sources come from the factor. Caller has waited.
    pub(crate) fn accumulate_into(&mut self, s: &Step, out: RawTiles, dst: usize) -> Result<()> {
        for &w in s.waits() {
            self.wait(w)?;
        }
        let t0 = Instant::now();
        self.kernel(s, dst, out)?;
        self.record(s.task.kind.code(), &s.task, t0, true);
        Ok(())
    }

    fn kernel(&mut self, s: &Step, dst: usize, out: RawTiles) -> Result<()> {
        let nt = self.nt;
        let t = &s.task;
        // SAFETY: the schedule gives `dst` a single writer (its owner, or the
        // leaf owning a private slot), and every source was published before
        // this point and is never written again.
        unsafe {
            let c = out.tile_mut(dst);
            match t.kind {
                TaskKind::Potrf => kernels::potrf(c, nt).map_err(|e| offset(e, t.k * nt))?,
                TaskKind::Trsm => kernels::trsm(self.tiles.tile(s.srcs[0]), c, nt).map_err(|e| offset(e, t.k * nt))?,
                TaskKind::Syrk => kernels::syrk(self.tiles.tile(s.srcs[0]), c, nt),
                TaskKind::Gemm => kernels::gemm(self.tiles.tile(s.srcs[0]), self.tiles.tile(s.srcs[1]), c, nt),
            }
        }
        self.stats.counts.bump(t.kind);
        Ok(())
    }

    pub(crate) fn geadd(&mut self, src: &[f64], dst: &mut [f64], task: &Task, private: bool) {
        let t0 = Instant::now();
        kernels::geadd(src, dst);
        self.stats.counts.geadd += 1;
        self.record(GEADD_CODE, task, t0, private);
    }

    pub(crate) fn finish(self) -> (WorkerStats, Vec<TraceRecord>) {
        (self.stats, self.trace.unwrap_or_default())
    }
}

fn offset(e: Error, base: usize) -> Error {
    match e {
        Error::NotPositiveDefinite { index } => Error::NotPositiveDefinite { index: base + index },
        e => e,
    }
}

/// Left-looking factorization in [`enumerate_tasks`] order. `a` is
/// overwritten by `L`; missing fill tiles are allocated first.
pub fn factorize_sequential(a: &mut TiledMatrix, s: &TileSymbolic) -> Result<FactorResult> {
    factorize_sequential_with(a, s, &ExecOptions::default())
}

pub fn factorize_sequential_with(a: &mut TiledMatrix, s: &TileSymbolic, opts: &ExecOptions) -> Result<FactorResult> {
    check_shape(a, s)?;
    ensure_factor_tiles(a, s.targets())?;
    let steps = enumerate_tasks(s).into_iter().map(|t| Step::resolve(a, t)).collect::<Result<Vec<_>>>()?;
    let flags = Flags::new(a.tile_count());
    let epoch = Instant::now();
    let mut w = Worker::new(0, a.tile_size(), a.raw(), &flags, epoch, opts.trace);
    for st in &steps {
        w.run(st)?;
    }
    let wall = epoch.elapsed();
    let (mut ws, trace) = w.finish();
    ws.wait += wall.saturating_sub(ws.busy + ws.wait);
    let published_flags = (0..flags.len()).filter(|&i| flags.is_set(i)).count();
    Ok(FactorResult {
        stats: FactorStats { counts: ws.counts, wall, workers: vec![ws], published_flags, reduced_tiles: 0 },
        trace: opts.trace.then_some(trace),
    })
}

pub(crate) fn check_shape(a: &TiledMatrix, s: &TileSymbolic) -> Result<()> {
    if a.n() != s.n() || a.tile_size() != s.tile_size() {
        return Err(Error::InvalidArgument(format!(
            "matrix (n={}, nt={}) does not match symbolic (n={}, nt={})",
            a.n(),
            a.tile_size(),
            s.n(),
            s.tile_size()
        )));
    }
    Ok(())
}

pub(crate) fn check_shape_table(a: &TiledMatrix, tt: &TaskTable) -> Result<()> {
    let t = a.grid().tiles_per_side();
    if let Some(g) = tt.groups().iter().find(|g| g.target.row >= t) {
        return Err(Error::InvalidArgument(format!(
            "task table tile ({}, {}) outside a {t}x{t} tile grid",
            g.target.row, g.target.col
        )));
    }
    Ok(())
}

pub(crate) fn merge_stats(
    per_worker: Vec<WorkerStats>,
    wall: Duration,
    published_flags: usize,
    reduced: usize,
) -> FactorStats {
    let mut counts = TaskCounts::default();
    for w in &per_worker {
        counts.add(&w.counts);
    }
    FactorStats { counts, wall, workers: per_worker, published_flags, reduced_tiles: reduced }
}
