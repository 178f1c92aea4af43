//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::time::{Duration, Instant};

use arrowtile::ctsf::{build_tile_grid, TileCoord, TileGrid, TiledMatrix};
use arrowtile::matcore::{generate_arrowhead, structure_stats, AdjacencyGraph};
use arrowtile::ordering::{adaptable_nd, partial_rcm, rcm, select_ordering, symbolic_fill_count};
use arrowtile::scheduler::{factorize_parallel, factorize_sequential, gemm_chain_sequential, gemm_chain_tree};
use arrowtile::symbolic::{
    build_task_table, dag_stats, plan_tree_reduction, reduction_threshold, tile_symbolic_factorize, ReductionPlan,
    TileSymbolic,
};
use arrowtile::{factorize, ArrowheadSpec, FactorOptions, OrderingPolicy, Permutation, ReductionPolicy, SymmetricCsc};
use arrowtile_validation::{couples, dense_cholesky, dense_residual, elimination_fill};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESIDUAL_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-10;
const REDUCTION_TOL: f64 = 1e-12;
const CHAIN_SPEEDUP: f64 = 3.0;
const SCALING_SPEEDUP: f64 = 2.5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn arrowhead(n: usize, b: usize, t: usize, seed: u64) -> SymmetricCsc {
    generate_arrowhead(&ArrowheadSpec::new(n, b, t).with_seed(seed)).expect("valid shape")
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Permutation {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Permutation::from_order(order).unwrap()
}

fn edges(m: &SymmetricCsc) -> Vec<(usize, usize)> {
    m.iter().filter(|&(i, j, _)| i != j).map(|(i, j, _)| (i, j)).collect()
}

fn packed(m: &SymmetricCsc, nt: usize) -> (TiledMatrix, TileSymbolic) {
    let s = tile_symbolic_factorize(&build_tile_grid(m, nt).unwrap());
    let grid = TileGrid::from_occupancy(m.n(), nt, s.targets()).unwrap();
    (TiledMatrix::pack_into(m, grid).unwrap(), s)
}

fn bits(t: &TiledMatrix) -> Vec<u64> {
    t.storage().iter().map(|v| v.to_bits()).collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Residual over the generator sweep, plus determinism of the parallel
/// schedule against the sequential one at every point.
fn residual_and_determinism() -> (Outcome, Outcome) {
    let mut worst_res = 0.0f64;
    let mut worst_tree = 0.0f64;
    let mut configs = 0;
    let mut bit_mismatch = Vec::new();
    let mut failures = Vec::new();
    let start = Instant::now();
    let mut residual_time = Duration::ZERO;
    for (seed, &n) in [512usize, 2000, 5000].iter().enumerate() {
        for &b in &[16usize, 64, 128] {
            for &t in &[4usize, 32] {
                let m = arrowhead(n, b, t, seed as u64 * 100 + b as u64 + t as u64);
                for &nt in &[8usize, 40, 120] {
                    for &w in &[1usize, 2, 4, 8] {
                        configs += 1;
                        let tag = format!("n={n} b={b} t={t} nt={nt} w={w}");
                        let opts = FactorOptions::default()
                            .with_tile_size(nt)
                            .with_workers(w)
                            .with_reduction(ReductionPolicy::Off);
                        let t0 = Instant::now();
                        let ctx = match factorize(&m, &opts) {
                            Ok(c) => c,
                            Err(e) => {
                                failures.push(format!("{tag}: {e}"));
                                continue;
                            }
                        };
                        let r = ctx.residual(&m).unwrap();
                        residual_time += t0.elapsed();
                        worst_res = worst_res.max(r);
                        if r.is_nan() || r > RESIDUAL_TOL {
                            failures.push(format!("{tag}: residual {r:e}"));
                        }

                        let (mut seq, s) = packed(&m.permute(ctx.permutation()).unwrap(), nt);
                        factorize_sequential(&mut seq, &s).unwrap();
                        if bits(&seq) != bits(ctx.factor()) {
                            bit_mismatch.push(tag.clone());
                        }
                        let tree = factorize(&m, &opts.with_reduction(ReductionPolicy::On)).unwrap();
                        let d = rel_diff(tree.factor().storage(), seq.storage());
                        worst_tree = worst_tree.max(d);
                        let rt = tree.residual(&m).unwrap();
                        worst_res = worst_res.max(rt);
                        if !(d <= REDUCTION_TOL) || rt > RESIDUAL_TOL {
                            failures.push(format!("{tag}: tree diff {d:e} residual {rt:e}"));
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let res = outcome(
        failures.is_empty() && residual_time < Duration::from_secs(60),
        format!(
            "{configs} configs, worst residual {worst_res:.2e} (tol {RESIDUAL_TOL:e}), factor+residual {:.1}s of {elapsed:.1}s{}",
            residual_time.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    );
    let det = outcome(
        bit_mismatch.is_empty() && worst_tree <= REDUCTION_TOL,
        format!(
            "reduction off bitwise equal at {}/{configs} points; reduction on worst rel diff {worst_tree:.2e} (tol {REDUCTION_TOL:e}){}",
            configs - bit_mismatch.len(),
            if bit_mismatch.is_empty() { String::new() } else { format!("; mismatches: {}", bit_mismatch.join(", ")) }
        ),
    );
    (res, det)
}

fn dense_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_dense_res = 0.0f64;
    let mut bad = Vec::new();
    let cases = [
        (64, 4, 4, 8, OrderingPolicy::Identity),
        (300, 7, 3, 16, OrderingPolicy::Auto),
        (500, 16, 8, 40, OrderingPolicy::AdaptableNd),
        (1000, 64, 32, 120, OrderingPolicy::Auto),
        (2000, 64, 32, 120, OrderingPolicy::Identity),
        (2000, 128, 4, 40, OrderingPolicy::Auto),
    ];
    for (idx, &(n, b, t, nt, ord)) in cases.iter().enumerate() {
        let m = arrowhead(n, b, t, 7 + idx as u64);
        let ctx =
            factorize(&m, &FactorOptions::default().with_tile_size(nt).with_workers(3).with_ordering(ord)).unwrap();
        let dense = m.permute(ctx.permutation()).unwrap().to_dense();
        let l = dense_cholesky(&dense, n).expect("generator output is SPD");
        let f = ctx.factor();
        let mut d = 0.0f64;
        for j in 0..n {
            for i in j..n {
                d = d.max((f.get(i, j) - l[i + j * n]).abs());
            }
        }
        worst = worst.max(d);
        if !(d <= ORACLE_TOL) {
            bad.push(format!("n={n} b={b} t={t} nt={nt}: {d:e}"));
        }
        if n <= 500 {
            worst_dense_res = worst_dense_res.max(dense_residual(&dense, &l, n));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut fill_bad = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=64);
        let p: f64 = rng.gen_range(0.0..0.3);
        let mut e = Vec::new();
        for j in 0..n {
            for i in j + 1..n {
                if rng.gen_bool(p) {
                    e.push((i, j));
                }
            }
        }
        let perm = shuffled(n, &mut rng);
        let fast = symbolic_fill_count(&AdjacencyGraph::from_edges(n, &e), &perm).nnz_factor;
        if fast != elimination_fill(n, &e, perm.inverse()) {
            fill_bad += 1;
        }
    }
    outcome(
        bad.is_empty() && fill_bad == 0,
        format!(
            "{} factors vs dense Cholesky, worst |dL| {worst:.2e} (tol {ORACLE_TOL:e}, oracle self-residual {worst_dense_res:.1e}); symbolic fill exact on {}/100 random patterns{}",
            cases.len(),
            100 - fill_bad,
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

fn chain_accumulation() -> Outcome {
    const NT: usize = 120;
    const WORKERS: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tiles: Vec<Vec<f64>> = (0..64).map(|_| (0..NT * NT).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect();
    let pairs = |k: usize| -> Vec<(&[f64], &[f64])> {
        (0..k).map(|i| (tiles[i % 32].as_slice(), tiles[32 + (i * 7) % 32].as_slice())).collect()
    };
    let time = |f: &dyn Fn(&mut [f64])| {
        let mut c = vec![0.0; NT * NT];
        let t0 = Instant::now();
        f(&mut c);
        (t0.elapsed(), c)
    };
    let short = pairs(1_000);
    let long = pairs(50_000);
    let t_short = (0..3).map(|_| time(&|c| gemm_chain_sequential(c, &short, NT)).0).min().unwrap();
    let (t_long, c_seq) = time(&|c| gemm_chain_sequential(c, &long, NT));
    let (t_tree, c_tree) = time(&|c| gemm_chain_tree(c, &long, NT, WORKERS));
    let growth = (t_long.as_secs_f64() / 50.0) / t_short.as_secs_f64();
    let speedup = t_long.as_secs_f64() / t_tree.as_secs_f64();
    let d = rel_diff(&c_tree, &c_seq);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        (0.5..=2.0).contains(&growth) && speedup >= CHAIN_SPEEDUP && d <= REDUCTION_TOL,
        format!(
            "k=1000 {:.3}s, k=50000 {:.2}s (per-GEMM growth {growth:.2}, need 0.5..2); tree with {WORKERS} workers {:.2}s, speedup {speedup:.2}x (need {CHAIN_SPEEDUP}x, {cores} hardware threads); tree vs sequential rel diff {d:.1e}",
            t_short.as_secs_f64(),
            t_long.as_secs_f64(),
            t_tree.as_secs_f64()
        ),
    )
}

/// Tile pattern whose only accumulation chain is the last diagonal tile,
/// with exactly `len` updates: disjoint diagonal blocks plus a dense last
/// tile row.
fn single_chain(len: usize, nt: usize) -> SymmetricCsc {
    generate_arrowhead(&ArrowheadSpec::new((len + 1) * nt, nt, nt).block_diagonal(true).with_seed(len as u64)).unwrap()
}

fn threshold_rule() -> Outcome {
    let nt = 4;
    let mut bad = Vec::new();
    let mut checked = 0;
    for p in [2usize, 3, 4, 8] {
        if reduction_threshold(p) != 2 * p {
            bad.push(format!("threshold({p}) = {}", reduction_threshold(p)));
        }
        for len in [2 * p - 1, 2 * p, 2 * p + 1] {
            checked += 1;
            let m = single_chain(len, nt);
            let s = tile_symbolic_factorize(&build_tile_grid(&m, nt).unwrap());
            let last = TileCoord::new(len, len);
            if s.accum_count(last) != len {
                bad.push(format!("P={p} len={len}: built chain has {}", s.accum_count(last)));
                continue;
            }
            let plan = plan_tree_reduction(&s, p);
            let reduced = plan.find(last).is_some();
            if reduced != (len >= 2 * p) || plan.len() != usize::from(reduced) {
                bad.push(format!("P={p} len={len}: reduced={reduced}, {} tiles planned", plan.len()));
            }
            let (mut a, s2) = packed(&m, nt);
            if factorize_parallel(&mut a, &build_task_table(&s2, p), &plan).is_err() {
                bad.push(format!("P={p} len={len}: factorization failed"));
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} chains at 2P-1, 2P, 2P+1 for P in 2,3,4,8{}", suffix(&bad)))
}

fn suffix(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; {}", bad.join("; "))
    }
}

fn dag_statistics() -> Outcome {
    let nt = 4;
    let dense = generate_arrowhead(&ArrowheadSpec::new(6 * nt, 6 * nt - 1, 0)).unwrap();
    let ds = dag_stats(&tile_symbolic_factorize(&build_tile_grid(&dense, nt).unwrap()));
    let arrow = generate_arrowhead(&ArrowheadSpec::new(6 * nt, 1, nt)).unwrap();
    let s = tile_symbolic_factorize(&build_tile_grid(&arrow, nt).unwrap());
    let as_ = dag_stats(&s);
    let counts = (ds.potrf, ds.trsm, ds.syrk, ds.gemm);
    outcome(
        counts == (6, 15, 15, 20) && as_.max_width < ds.max_width && s.tiles_per_side() == 6,
        format!(
            "dense T=6 POTRF/TRSM/SYRK/GEMM = {}/{}/{}/{}, max width {}; arrowhead T=6 max width {}",
            counts.0, counts.1, counts.2, counts.3, ds.max_width, as_.max_width
        ),
    )
}

fn ordering_quality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut bad = Vec::new();
    let mut gain = 0.0;
    for i in 0..20 {
        let n = rng.gen_range(200..1200);
        let b = rng.gen_range(2..20);
        let t = rng.gen_range(1..24);
        let m = arrowhead(n, b, t, 1000 + i).permute(&shuffled(n, &mut rng)).unwrap();
        let g = AdjacencyGraph::from_csc(&m);
        let stats = structure_stats(&m);
        let prcm = partial_rcm(&g, 0.5).unwrap();
        let full = rcm(&g, 0).unwrap();
        let f_p = symbolic_fill_count(&g, &prcm).nnz_factor;
        let f_full = symbolic_fill_count(&g, &full).nnz_factor;
        let cands = [prcm, full, adaptable_nd(&g, &stats, 1)];
        let chosen = symbolic_fill_count(&g, &select_ordering(&g, &cands)).nnz_factor;
        let identity = symbolic_fill_count(&g, &Permutation::identity(n)).nnz_factor;
        let best = cands.iter().map(|c| symbolic_fill_count(&g, c).nnz_factor).min().unwrap();
        if f_p > f_full {
            bad.push(format!("#{i} n={n} b={b} t={t}: partial {f_p} > full {f_full}"));
        }
        if chosen > identity || chosen > best {
            bad.push(format!("#{i}: selected {chosen}, identity {identity}, best candidate {best}"));
        }
        gain += 1.0 - f_p as f64 / f_full as f64;
    }
    outcome(
        bad.is_empty(),
        format!("20 scrambled instances, partial RCM saves {:.1}% factor nonzeros over full RCM on average; selection never worse{}", 100.0 * gain / 20.0, suffix(&bad)),
    )
}

fn nd_independence() -> Outcome {
    let mut bad = Vec::new();
    let cases = [(1000, 10, 0), (1000, 10, 20), (2001, 37, 5), (600, 1, 3), (5000, 128, 32)];
    for (idx, &(n, b, t)) in cases.iter().enumerate() {
        let m = arrowhead(n, b, t, idx as u64);
        let g = AdjacencyGraph::from_csc(&m);
        let stats = structure_stats(&m);
        let p = adaptable_nd(&g, &stats, 1);
        let lead = n - t;
        let mid = lead / 2;
        let (p1, p2) = (0..mid, mid..lead - b);
        if couples(&edges(&m), p.forward(), p1.clone(), p2.clone()) {
            bad.push(format!("n={n} b={b} t={t}: P1 and P2 coupled"));
        }
        // Same property on the stored entries of the permuted matrix itself.
        let pm = m.permute(&p).unwrap();
        let crossing = pm.iter().filter(|&(i, j, _)| p2.contains(&i) && p1.contains(&j)).count();
        if crossing != 0 {
            bad.push(format!("n={n} b={b} t={t}: {crossing} stored entries couple P1 and P2"));
        }
        let tail: Vec<usize> = p.inverse()[lead..].to_vec();
        if tail != (lead..n).collect::<Vec<_>>() {
            bad.push(format!("n={n} t={t}: arrowhead moved"));
        }
    }
    outcome(bad.is_empty(), format!("{} banded instances, one-level dissection{}", cases.len(), suffix(&bad)))
}

fn scalability() -> Outcome {
    const N: usize = 50_000;
    const NT: usize = 120;
    let m = arrowhead(N, 1500, 100, 12);
    let s = tile_symbolic_factorize(&build_tile_grid(&m, NT).unwrap());
    let grid = TileGrid::from_occupancy(N, NT, s.targets()).unwrap();
    let run = |workers: usize| -> Duration {
        let tt = build_task_table(&s, workers);
        let plan = if workers > 1 { plan_tree_reduction(&s, workers) } else { ReductionPlan::empty(workers) };
        (0..3)
            .map(|_| {
                let mut a = TiledMatrix::pack_into(&m, grid.clone()).unwrap();
                let t0 = Instant::now();
                factorize_parallel(&mut a, &tt, &plan).unwrap();
                t0.elapsed()
            })
            .min()
            .unwrap()
    };
    let t1 = run(1);
    let t8 = run(8);
    let speedup = t1.as_secs_f64() / t8.as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        speedup >= SCALING_SPEEDUP,
        format!(
            "n={N} b=1500 t=100 nt={NT}, {} tiles: 1 worker {:.2}s, 8 workers {:.2}s (best of 3), speedup {speedup:.2}x (need {SCALING_SPEEDUP}x, {cores} hardware threads)",
            s.factor_tile_count(),
            t1.as_secs_f64(),
            t8.as_secs_f64()
        ),
    )
}

fn report(id: &str, name: &str, o: &Outcome) -> bool {
    println!("{} {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

/// Criteria to run: every numeric argument names one; none means all.
fn selected() -> Vec<u32> {
    let picked: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if picked.is_empty() {
        (1..=9).collect()
    } else {
        picked
    }
}

fn main() {
    let want = selected();
    let on = |c: u32| want.contains(&c);
    let mut all = true;
    if on(1) || on(3) {
        let (res, det) = residual_and_determinism();
        all &= report("1", "residual", &res);
        all &= report("3", "determinism", &det);
    }
    if on(2) {
        all &= report("2", "dense oracle", &dense_oracle());
    }
    if on(4) {
        all &= report("4", "chain accumulation", &chain_accumulation());
    }
    if on(5) {
        all &= report("5", "reduction threshold", &threshold_rule());
    }
    if on(6) {
        all &= report("6", "dag statistics", &dag_statistics());
    }
    if on(7) {
        all &= report("7", "ordering quality", &ordering_quality());
    }
    if on(8) {
        all &= report("8", "nd independence", &nd_independence());
    }
    if on(9) {
        all &= report("9", "scalability", &scalability());
    }
    println!("N/A 10 external solver and GPU speedups: not reproducible here, no comparison drivers are built");
    if !all {
        std::process::exit(1);
    }
}
