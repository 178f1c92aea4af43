use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use arrowtile::{ArrowheadSpec, OrderingPolicy, ReductionPolicy};
use arrowtile_harness::{dag, factor, generate, sweep, write_csv, MatrixSource, RunConfig, SweepPlan};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arrowtile", version, about = "Tile Cholesky for block arrowhead matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random SPD arrowhead matrix and a JSON statistics sidecar.
    Generate {
        #[command(flatten)]
        shape: Shape,
        /// Output Matrix Market file; the sidecar goes next to it as .json.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Factorize once and print a JSON report.
    Factor {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, default_value_t = arrowtile::api::DEFAULT_TILE_SIZE)]
        tile: usize,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        #[arg(long, default_value = "auto", value_parser = parse_reduction)]
        reduction: ReductionPolicy,
        /// Write a per-kernel CSV trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a grid of configurations and print CSV rows.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, value_delimiter = ',', default_value = "120")]
        tile: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [default_workers()])]
        workers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "auto", value_parser = parse_reduction)]
        reduction: Vec<ReductionPolicy>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Export the task DAG as DOT and print its statistics as JSON.
    Dag {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = arrowtile::api::DEFAULT_TILE_SIZE)]
        tile: usize,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Shape {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    band: usize,
    #[arg(long, default_value_t = 0)]
    thick: usize,
    /// Block-diagonal leading part instead of a band.
    #[arg(long)]
    block_diag: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Shape {
    fn spec(&self) -> Result<ArrowheadSpec> {
        let Some(n) = self.n else { bail!("--n is required when no matrix file is given") };
        Ok(ArrowheadSpec::new(n, self.band, self.thick).with_seed(self.seed).block_diagonal(self.block_diag))
    }
}

#[derive(Args)]
struct Input {
    /// Matrix Market file; without it the matrix is generated from the shape flags.
    matrix: Option<PathBuf>,
    #[command(flatten)]
    shape: Shape,
}

impl Input {
    fn source(&self) -> Result<MatrixSource> {
        Ok(match &self.matrix {
            Some(p) => MatrixSource::File(p.clone()),
            None => MatrixSource::Generated(self.shape.spec()?),
        })
    }
}

#[derive(Args)]
struct RunFlags {
    #[arg(long, default_value = "auto", value_parser = parse_ordering)]
    ordering: OrderingPolicy,
    /// Count ordering, packing and planning in the reported wall time.
    #[arg(long)]
    include_preproc: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_ordering(s: &str) -> Result<OrderingPolicy, String> {
    s.parse().map_err(|e: arrowtile::Error| e.to_string())
}

fn parse_reduction(s: &str) -> Result<ReductionPolicy, String> {
    s.parse().map_err(|e: arrowtile::Error| e.to_string())
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("writing {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { shape, out } => {
            let side = generate(&shape.spec()?, &out)?;
            println!("{}", serde_json::to_string_pretty(&side)?);
        }
        Command::Factor { input, run, tile, workers, reduction, trace, out } => {
            let (id, m) = input.source()?.load()?;
            let cfg = RunConfig {
                tile_size: tile,
                workers,
                ordering: run.ordering,
                reduction,
                include_preproc: run.include_preproc,
                trace,
            };
            let report = factor(&id, &m, &cfg)?;
            let mut w = output(out.as_ref())?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
        }
        Command::Sweep { input, run, tile, workers, reduction, out } => {
            if tile.is_empty() || workers.is_empty() || reduction.is_empty() {
                bail!("sweep lists must be nonempty");
            }
            let (id, m) = input.source()?.load()?;
            let plan = SweepPlan {
                tile_sizes: tile,
                workers,
                reductions: reduction,
                ordering: run.ordering,
                include_preproc: run.include_preproc,
            };
            let rows = sweep(&id, &m, &plan);
            write_csv(&rows, output(out.as_ref())?)?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("tile {} workers {}: {}", r.tile_size, r.workers, r.error.as_deref().unwrap_or_default());
            }
        }
        Command::Dag { input, tile, dot } => {
            let (_, m) = input.source()?.load()?;
            let (text, stats) = dag(&m, tile)?;
            if let Some(p) = dot {
                fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
    }
    Ok(())
}
