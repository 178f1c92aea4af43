use std::thread;

use super::progress::Flags;
use crate::ctsf::RawTiles;
use crate::kernels;
use crate::symbolic::{balanced_chunks, combine_partners};

/// `c ← c − Σ bᵢ aᵢᵀ` over `(aᵢ, bᵢ)` pairs, one GEMM at a time.
pub fn gemm_chain_sequential(c: &mut [f64], pairs: &[(&[f64], &[f64])], nt: usize) {
    for (a, b) in pairs {
        kernels::gemm(a, b, c, nt);
    }
}

/// Same update, with the chain split into `workers` contiguous slices summed
/// into private tiles and folded by a binary GEADD tree before one final
/// addition into `c`.
pub fn gemm_chain_tree(c: &mut [f64], pairs: &[(&[f64], &[f64])], nt: usize, workers: usize) {
    let leaves = workers.clamp(1, pairs.len().max(1));
    if leaves == 1 {
        return gemm_chain_sequential(c, pairs, nt);
    }
    let tile_len = nt * nt;
    let mut pool = vec![0.0; leaves * tile_len];
    let private = RawTiles::new(&mut pool, tile_len);
    let chunks = balanced_chunks(pairs.len(), leaves);
    let flags = Flags::new(leaves);
    let leaf_work = |leaf: usize| {
        // SAFETY: each leaf writes only its own slot; a partner slot is read
        // after its ready flag, and never written again.
        let mine = unsafe { private.tile_mut(leaf) };
        gemm_chain_sequential(mine, &pairs[chunks[leaf].clone()], nt);
        for p in combine_partners(leaf, leaves) {
            if flags.wait(p).is_err() {
                return;
            }
            kernels::geadd(unsafe { private.tile(p) }, mine);
        }
        flags.set(leaf);
    };
    thread::scope(|sc| {
        for leaf in 1..leaves {
            let (leaf_work, flags) = (&leaf_work, &flags);
            sc.spawn(move || {
                let _guard = AbortGuard(flags);
                leaf_work(leaf)
            });
        }
        let _guard = AbortGuard(&flags);
        leaf_work(0);
    });
    kernels::geadd(&pool[..tile_len], c);
}

struct AbortGuard<'a>(&'a Flags);

impl Drop for AbortGuard<'_> {
    fn drop(&mut self) {
        if thread::panicking() {
            self.0.abort();
        }
    }
}
