//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use arrowtile::ctsf::{TileCoord, TiledMatrix};
use arrowtile::matcore::{generate_arrowhead, ArrowheadSpec, SymmetricCsc};
use arrowtile::Permutation;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Unblocked right-looking Cholesky of a dense column-major matrix.
/// Returns the lower factor, or `None` on a non-positive pivot.
pub fn dense_cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    for k in 0..n {
        let d = l[k + k * n];
        if d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l[k + k * n] = d;
        for i in k + 1..n {
            l[i + k * n] /= d;
        }
        for j in k + 1..n {
            let ljk = l[j + k * n];
            if ljk != 0.0 {
                for i in j..n {
                    l[i + j * n] -= l[i + k * n] * ljk;
                }
            }
        }
    }
    for j in 0..n {
        for i in 0..j {
            l[i + j * n] = 0.0;
        }
    }
    Some(l)
}

pub fn dense_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for j in 0..n {
        y[j] /= l[j + j * n];
        for i in j + 1..n {
            y[i] -= l[i + j * n] * y[j];
        }
    }
    for j in (0..n).rev() {
        let s: f64 = (j + 1..n).map(|i| l[i + j * n] * y[i]).sum();
        y[j] = (y[j] - s) / l[j + j * n];
    }
    y
}

pub fn dense_logdet(l: &[f64], n: usize) -> f64 {
    2.0 * (0..n).map(|i| l[i + i * n].ln()).sum::<f64>()
}

/// Largest `|L_tiled(i, j) − L_dense(i, j)|` over the lower triangle.
pub fn max_factor_diff(t: &TiledMatrix, l: &[f64]) -> f64 {
    let n = t.n();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((t.get(i, j) - l[i + j * n]).abs());
        }
    }
    worst
}

/// Tiles holding a nonzero of a dense lower factor.
pub fn nonzero_tiles(l: &[f64], n: usize, nt: usize) -> Vec<TileCoord> {
    let mut out = std::collections::BTreeSet::new();
    for j in 0..n {
        for i in j..n {
            if l[i + j * n] != 0.0 {
                out.insert(TileCoord::new(i / nt, j / nt));
            }
        }
    }
    out.into_iter().collect()
}

pub fn arrowhead(n: usize, b: usize, t: usize, seed: u64) -> SymmetricCsc {
    generate_arrowhead(&ArrowheadSpec::new(n, b, t).with_seed(seed)).expect("valid spec")
}

pub fn random_permutation(n: usize, seed: u64) -> Permutation {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Permutation::from_order(order).unwrap()
}

/// Band + arrowhead under a random symmetric permutation.
pub fn scrambled(n: usize, b: usize, t: usize, seed: u64) -> SymmetricCsc {
    arrowhead(n, b, t, seed).permute(&random_permutation(n, seed ^ 0x5eed)).unwrap()
}

pub fn bits(t: &TiledMatrix) -> Vec<u64> {
    t.storage().iter().map(|v| v.to_bits()).collect()
}

pub fn rel_frobenius_diff(a: &TiledMatrix, b: &TiledMatrix) -> f64 {
    let num: f64 = a.storage().iter().zip(b.storage()).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = a.storage().iter().map(|x| x * x).sum();
    (num / den).sqrt()
}
