//! Library side of the `arrowtile` command-line tool: matrix generation with
//! a statistics sidecar, single factorization reports, parameter sweeps and
//! DAG export.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use arrowtile::matcore::{
    generate_arrowhead, read_matrix_market_file, structure_stats, write_matrix_market_file, StructureStats,
};
use arrowtile::scheduler::{write_trace_csv, TaskCounts};
use arrowtile::symbolic::{tile_symbolic_factorize, DagStats, TaskDag};
use arrowtile::{ctsf, factorize, ArrowheadSpec, FactorOptions, OrderingPolicy, ReductionPolicy, SymmetricCsc};
use serde::{Deserialize, Serialize};

/// Where a run gets its matrix.
#[derive(Debug, Clone)]
pub enum MatrixSource {
    File(PathBuf),
    Generated(ArrowheadSpec),
}

impl MatrixSource {
    /// Loads the matrix and a short identifier for reports.
    pub fn load(&self) -> Result<(String, SymmetricCsc)> {
        match self {
            MatrixSource::File(p) => {
                let m = read_matrix_market_file(p).with_context(|| format!("reading {}", p.display()))?;
                let id = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                Ok((id, m))
            }
            MatrixSource::Generated(spec) => Ok((spec_id(spec), generate_arrowhead(spec)?)),
        }
    }
}

pub fn spec_id(spec: &ArrowheadSpec) -> String {
    format!("arrow-n{}-b{}-t{}{}-s{}", spec.n, spec.b, spec.t, if spec.block_diagonal { "-bd" } else { "" }, spec.seed)
}

/// Contents of the JSON file written next to a generated matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: ArrowheadSpec,
    pub n: usize,
    pub nnz_lower: usize,
    pub nnz_full: usize,
    pub stats: StructureStats,
}

pub fn sidecar_path(matrix: &Path) -> PathBuf {
    matrix.with_extension("json")
}

/// Writes `out` (Matrix Market) and its `.json` statistics sidecar.
pub fn generate(spec: &ArrowheadSpec, out: &Path) -> Result<Sidecar> {
    let m = generate_arrowhead(spec)?;
    write_matrix_market_file(&m, out).with_context(|| format!("writing {}", out.display()))?;
    let side =
        Sidecar { spec: *spec, n: m.n(), nnz_lower: m.nnz(), nnz_full: m.full_nnz(), stats: structure_stats(&m) };
    let path = sidecar_path(out);
    let f = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &side)?;
    Ok(side)
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tile_size: usize,
    pub workers: usize,
    pub ordering: OrderingPolicy,
    pub reduction: ReductionPolicy,
    /// Count ordering, packing and planning in `wall_seconds`.
    pub include_preproc: bool,
    pub trace: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let o = FactorOptions::default();
        RunConfig {
            tile_size: o.tile_size,
            workers: o.workers,
            ordering: o.ordering,
            reduction: o.reduction,
            include_preproc: false,
            trace: None,
        }
    }
}

impl RunConfig {
    pub fn options(&self) -> FactorOptions {
        FactorOptions::default()
            .with_tile_size(self.tile_size)
            .with_workers(self.workers)
            .with_ordering(self.ordering)
            .with_reduction(self.reduction)
            .with_trace(self.trace.is_some())
    }
}

/// One factorization, flattened for CSV.
///
/// Columns: `matrix, n, nnz, tile_size, workers, reduction, ordering,
/// ordering_used, nnz_factor, fill_in, reduced_tiles, wall_seconds,
/// ordering_seconds, packing_seconds, symbolic_seconds, numeric_seconds,
/// residual, error`. `wall_seconds` is the numeric phase unless
/// preprocessing was included. Failed runs keep their configuration, carry
/// the message in `error` and NaN measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub matrix: String,
    pub n: usize,
    pub nnz: usize,
    pub tile_size: usize,
    pub workers: usize,
    pub reduction: ReductionPolicy,
    pub ordering: OrderingPolicy,
    pub ordering_used: String,
    pub nnz_factor: usize,
    pub fill_in: usize,
    pub reduced_tiles: usize,
    pub wall_seconds: f64,
    pub ordering_seconds: f64,
    pub packing_seconds: f64,
    pub symbolic_seconds: f64,
    pub numeric_seconds: f64,
    pub residual: f64,
    pub error: Option<String>,
}

impl BenchRecord {
    fn failed(id: &str, m: &SymmetricCsc, cfg: &RunConfig, e: &dyn std::fmt::Display) -> Self {
        BenchRecord {
            matrix: id.to_string(),
            n: m.n(),
            nnz: m.nnz(),
            tile_size: cfg.tile_size,
            workers: cfg.workers,
            reduction: cfg.reduction,
            ordering: cfg.ordering,
            ordering_used: String::new(),
            nnz_factor: 0,
            fill_in: 0,
            reduced_tiles: 0,
            wall_seconds: f64::NAN,
            ordering_seconds: f64::NAN,
            packing_seconds: f64::NAN,
            symbolic_seconds: f64::NAN,
            numeric_seconds: f64::NAN,
            residual: f64::NAN,
            error: Some(e.to_string()),
        }
    }
}

/// Full single-run report.
#[derive(Debug, Clone, Serialize)]
pub struct FactorReport {
    pub record: BenchRecord,
    pub counts: TaskCounts,
    pub factor_tiles: usize,
    pub fill_tiles: usize,
    pub logdet: f64,
    pub worker_busy_seconds: Vec<f64>,
    pub worker_wait_seconds: Vec<f64>,
}

/// Factorizes `m` once and measures it.
pub fn factor(id: &str, m: &SymmetricCsc, cfg: &RunConfig) -> Result<FactorReport> {
    let ctx = factorize(m, &cfg.options())?;
    let t = ctx.timings();
    let residual = ctx.residual(m)?;
    let wall = if cfg.include_preproc { t.total() } else { t.numeric };
    if let (Some(path), Some(trace)) = (&cfg.trace, ctx.trace()) {
        let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        write_trace_csv(trace, BufWriter::new(f))?;
    }
    let fill = ctx.fill();
    let stats = ctx.stats();
    Ok(FactorReport {
        record: BenchRecord {
            matrix: id.to_string(),
            n: m.n(),
            nnz: m.nnz(),
            tile_size: cfg.tile_size,
            workers: cfg.workers,
            reduction: cfg.reduction,
            ordering: cfg.ordering,
            ordering_used: ctx.ordering().name.to_string(),
            nnz_factor: fill.nnz_factor,
            fill_in: fill.fill_in,
            reduced_tiles: stats.reduced_tiles,
            wall_seconds: wall.as_secs_f64(),
            ordering_seconds: t.ordering.as_secs_f64(),
            packing_seconds: t.packing.as_secs_f64(),
            symbolic_seconds: t.symbolic.as_secs_f64(),
            numeric_seconds: t.numeric.as_secs_f64(),
            residual,
            error: None,
        },
        counts: stats.counts,
        factor_tiles: ctx.symbolic().factor_tile_count(),
        fill_tiles: ctx.symbolic().fill_tile_count(),
        logdet: ctx.logdet(),
        worker_busy_seconds: stats.workers.iter().map(|w| w.busy.as_secs_f64()).collect(),
        worker_wait_seconds: stats.workers.iter().map(|w| w.wait.as_secs_f64()).collect(),
    })
}

/// Axes of a sweep; the cartesian product is run in tile, worker, reduction order.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub tile_sizes: Vec<usize>,
    pub workers: Vec<usize>,
    pub reductions: Vec<ReductionPolicy>,
    pub ordering: OrderingPolicy,
    pub include_preproc: bool,
}

/// Runs every configuration; a failing run becomes a row with `error` set.
pub fn sweep(id: &str, m: &SymmetricCsc, plan: &SweepPlan) -> Vec<BenchRecord> {
    let mut rows = Vec::new();
    for &tile_size in &plan.tile_sizes {
        for &workers in &plan.workers {
            for &reduction in &plan.reductions {
                let cfg = RunConfig {
                    tile_size,
                    workers,
                    ordering: plan.ordering,
                    reduction,
                    include_preproc: plan.include_preproc,
                    trace: None,
                };
                rows.push(match factor(id, m, &cfg) {
                    Ok(r) => r.record,
                    Err(e) => BenchRecord::failed(id, m, &cfg, &e),
                });
            }
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[BenchRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(Into::into)).collect()
}

/// Precedence DAG of `m` at tile size `nt`, in DOT form, with statistics.
pub fn dag(m: &SymmetricCsc, nt: usize) -> Result<(String, DagStats)> {
    let s = tile_symbolic_factorize(&ctsf::build_tile_grid(m, nt)?);
    let d = TaskDag::build(&s);
    Ok((d.to_dot(), d.stats()))
}
