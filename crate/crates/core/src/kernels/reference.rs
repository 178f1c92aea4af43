//! Naive reference kernels. Same contracts as the parent module, written
//! for clarity rather than speed.

use crate::error::{Error, Result};

pub fn potrf(a: &mut [f64], nt: usize) -> Result<()> {
    for j in 0..nt {
        let mut d = a[j + j * nt];
        for p in 0..j {
            d -= a[j + p * nt] * a[j + p * nt];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j });
        }
        let d = d.sqrt();
        a[j + j * nt] = d;
        for i in j + 1..nt {
            let mut s = a[i + j * nt];
            for p in 0..j {
                s -= a[i + p * nt] * a[j + p * nt];
            }
            a[i + j * nt] = s / d;
        }
        for i in 0..j {
            a[i + j * nt] = 0.0;
        }
    }
    Ok(())
}

/// Solves `X Lᵀ = B` row by row.
pub fn trsm(l: &[f64], b: &mut [f64], nt: usize) {
    for r in 0..nt {
        for c in 0..nt {
            let mut s = b[r + c * nt];
            for p in 0..c {
                s -= b[r + p * nt] * l[c + p * nt];
            }
            b[r + c * nt] = s / l[c + c * nt];
        }
    }
}

pub fn syrk(a: &[f64], c: &mut [f64], nt: usize) {
    for j in 0..nt {
        for i in j..nt {
            let s: f64 = (0..nt).map(|p| a[i + p * nt] * a[j + p * nt]).sum();
            c[i + j * nt] -= s;
        }
    }
}

pub fn gemm(a: &[f64], b: &[f64], c: &mut [f64], nt: usize) {
    for j in 0..nt {
        for i in 0..nt {
            let s: f64 = (0..nt).map(|p| b[i + p * nt] * a[j + p * nt]).sum();
            c[i + j * nt] -= s;
        }
    }
}

pub fn geadd(t: &[f64], c: &mut [f64]) {
    for k in 0..c.len() {
        c[k] += t[k];
    }
}
