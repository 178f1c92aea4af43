use std::collections::HashMap;
use std::sync::{Mutex, PoisonError};
use std::thread;
use std::time::Instant;

use super::progress::Flags;
use super::{check_shape_table, ensure_factor_tiles, merge_stats, ExecOptions, FactorResult, Step, Worker};
use crate::ctsf::{RawTiles, TileCoord, TiledMatrix};
use crate::error::{Error, Result};
use crate::symbolic::{combine_partners, ReductionPlan, Task, TaskTable};

enum Op {
    Run(Step),
    /// Leaf `leaf` of reduced tile `tile`.
    Reduce {
        tile: usize,
        leaf: usize,
    },
}

struct Reduced {
    steps: Vec<Step>,
    finalizer: Step,
    chunks: Vec<std::ops::Range<usize>>,
    partners: Vec<Vec<usize>>,
    ring_slot: usize,
}

struct Shared<'a> {
    flags: &'a Flags,
    reduced: &'a [Reduced],
    tiles: RawTiles,
    private: RawTiles,
    leaves: usize,
    ring: usize,
    ready_base: usize,
    done_base: usize,
}

/// Raises the abort flag if its worker unwinds, so peers stop waiting.
struct AbortOnPanic<'a>(&'a Flags);

impl Drop for AbortOnPanic<'_> {
    fn drop(&mut self) {
        if thread::panicking() {
            self.0.abort();
        }
    }
}

/// Runs `tt` on `tt.worker_count()` threads. Tiles in `plan` are reduced.
pub fn factorize_parallel(a: &mut TiledMatrix, tt: &TaskTable, plan: &ReductionPlan) -> Result<FactorResult> {
    factorize_parallel_with(a, tt, plan, &ExecOptions::default())
}

pub fn factorize_parallel_with(
    a: &mut TiledMatrix,
    tt: &TaskTable,
    plan: &ReductionPlan,
    opts: &ExecOptions,
) -> Result<FactorResult> {
    let workers = tt.worker_count();
    if !plan.is_empty() && plan.workers != workers {
        return Err(Error::InvalidArgument(format!(
            "reduction plan for {} workers used with a {workers}-worker task table",
            plan.workers
        )));
    }
    check_shape_table(a, tt)?;
    ensure_factor_tiles(a, tt.groups().iter().map(|g| g.target))?;

    let planned: HashMap<TileCoord, usize> = plan.tiles.iter().enumerate().map(|(j, t)| (t.target, j)).collect();
    let mut programs: Vec<Vec<Op>> = (0..workers).map(|_| Vec::new()).collect();
    let mut reduced: Vec<Option<Reduced>> = (0..plan.len()).map(|_| None).collect();
    for g in tt.groups() {
        let Some(&j) = planned.get(&g.target) else {
            for &t in &g.tasks {
                programs[g.owner].push(Op::Run(Step::resolve(a, t)?));
            }
            continue;
        };
        let rt = &plan.tiles[j];
        let sources: Vec<usize> = g.accumulations().iter().map(|t| t.n).collect();
        if rt.participants[0] != g.owner || sources != rt.accumulations || rt.leaves() != workers {
            return Err(Error::InvalidArgument(format!(
                "reduction plan does not match task table at tile ({}, {})",
                g.target.row, g.target.col
            )));
        }
        reduced[j] = Some(Reduced {
            steps: g.accumulations().iter().map(|&t| Step::resolve(a, t)).collect::<Result<_>>()?,
            finalizer: Step::resolve(a, g.finalizer())?,
            chunks: rt.chunks.clone(),
            partners: (0..workers).map(|leaf| combine_partners(leaf, workers)).collect(),
            ring_slot: rt.ring_slot,
        });
        for (leaf, &w) in rt.participants.iter().enumerate() {
            programs[w].push(Op::Reduce { tile: j, leaf });
        }
    }
    let reduced: Vec<Reduced> = reduced
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidArgument("reduction plan names a tile outside the task table".into()))?;

    let tile_len = a.tile_size() * a.tile_size();
    let tiles = a.tile_count();
    let flags = Flags::new(tiles + plan.len() * workers + plan.len());
    let mut pool = vec![0.0; plan.private_slots() * tile_len];
    let shared = Shared {
        flags: &flags,
        reduced: &reduced,
        tiles: a.raw(),
        private: RawTiles::new(&mut pool, tile_len),
        leaves: workers,
        ring: plan.ring,
        ready_base: tiles,
        done_base: tiles + plan.len() * workers,
    };
    let nt = a.tile_size();
    let first_error: Mutex<Option<Error>> = Mutex::new(None);
    let epoch = Instant::now();
    let outs = thread::scope(|sc| {
        let handles: Vec<_> = programs
            .iter()
            .enumerate()
            .map(|(id, prog)| {
                let (shared, first_error) = (&shared, &first_error);
                sc.spawn(move || {
                    let _guard = AbortOnPanic(shared.flags);
                    let mut w = Worker::new(id, nt, shared.tiles, shared.flags, epoch, opts.trace);
                    if let Err(e) = run_program(&mut w, prog, shared) {
                        if !matches!(e, Error::Aborted) {
                            first_error.lock().unwrap_or_else(PoisonError::into_inner).get_or_insert(e);
                        }
                        shared.flags.abort();
                    }
                    let done = Instant::now();
                    (w.finish(), done)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p))).collect::<Vec<_>>()
    });
    let wall = epoch.elapsed();
    if let Some(e) = first_error.into_inner().unwrap_or_else(PoisonError::into_inner) {
        return Err(e);
    }
    if flags.is_aborted() {
        return Err(Error::Aborted);
    }
    let published = (0..tiles).filter(|&i| flags.is_set(i)).count();
    let mut trace = Vec::new();
    let mut per_worker = Vec::with_capacity(workers);
    for ((mut ws, tr), done) in outs {
        ws.wait += wall.saturating_sub(done - epoch);
        per_worker.push(ws);
        trace.extend(tr);
    }
    trace.sort_by_key(|r| (r.start, r.worker));
    Ok(FactorResult { stats: merge_stats(per_worker, wall, published, plan.len()), trace: opts.trace.then_some(trace) })
}

fn run_program(w: &mut Worker<'_>, prog: &[Op], sh: &Shared<'_>) -> Result<()> {
    for op in prog {
        if sh.flags.is_aborted() {
            return Err(Error::Aborted);
        }
        match *op {
            Op::Run(ref s) => w.run(s)?,
            Op::Reduce { tile, leaf } => reduce(w, sh, tile, leaf)?,
        }
    }
    Ok(())
}

/// One leaf of a reduced tile: accumulate the chunk privately, fold in the
/// partner leaves, and (leaf 0) add the sum into the target and finalize it.
fn reduce(w: &mut Worker<'_>, sh: &Shared<'_>, j: usize, leaf: usize) -> Result<()> {
    let rt = &sh.reduced[j];
    if j >= sh.ring {
        // The previous tile using this ring slot must have been folded.
        w.wait(sh.done_base + j - sh.ring)?;
    }
    let base = rt.ring_slot * sh.leaves;
    let mine = base + leaf;
    let ready = |l: usize| sh.ready_base + j * sh.leaves + l;
    // SAFETY: private slot `mine` is written only by this leaf until done[j];
    // its previous user finished before done[j - ring].
    unsafe { sh.private.tile_mut(mine).fill(0.0) };
    for s in &rt.steps[rt.chunks[leaf].clone()] {
        w.accumulate_into(s, sh.private, mine)?;
    }
    let fin = rt.finalizer.task;
    for &p in &rt.partners[leaf] {
        w.wait(ready(p))?;
        let tag = Task { n: p, ..fin };
        // SAFETY: leaf `p` published ready and never writes its slot again
        // before done[j].
        unsafe { w.geadd(sh.private.tile(base + p), sh.private.tile_mut(mine), &tag, true) };
    }
    sh.flags.set(ready(leaf));
    if leaf == 0 {
        // SAFETY: leaf 0 runs on the tile owner, the target's only writer.
        unsafe { w.geadd(sh.private.tile(mine), sh.tiles.tile_mut(rt.finalizer.target), &fin, false) };
        sh.flags.set(sh.done_base + j);
        w.run(&rt.finalizer)?;
    }
    Ok(())
}
