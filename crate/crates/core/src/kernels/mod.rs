//! Dense tile kernels on `nt x nt` column-major tiles (lower convention,
//! `A = L Lᵀ`).
//!
//! | kernel  | update                         |
//! |---------|--------------------------------|
//! | POTRF   | `A ← L` with `L Lᵀ = A`        |
//! | TRSM    | `B ← B L⁻ᵀ`                    |
//! | SYRK    | `C ← C − A Aᵀ`                 |
//! | GEMM    | `C ← C − B Aᵀ`                 |
//! | GEADD   | `C ← C + T`                    |
//!
//! GEMM-shaped products go through `matrixmultiply`; [`reference`] holds
//! plain triple-loop versions used as test oracles.

pub mod reference;

use crate::error::{Error, Result};

/// An owned square tile.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    nt: usize,
    data: Vec<f64>,
}

impl Tile {
    pub fn zeros(nt: usize) -> Self {
        Self { nt, data: vec![0.0; nt * nt] }
    }

    pub fn identity(nt: usize) -> Self {
        let mut t = Self::zeros(nt);
        for i in 0..nt {
            t.data[i + i * nt] = 1.0;
        }
        t
    }

    /// From row-major nested rows (convenient for literals).
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nt = rows.len();
        let mut t = Self::zeros(nt);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), nt, "tile must be square");
            for (c, &v) in row.iter().enumerate() {
                t.data[r + c * nt] = v;
            }
        }
        t
    }

    pub fn from_col_major(nt: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nt * nt);
        Self { nt, data }
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r + c * self.nt]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r + c * self.nt] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|v| *v *= s);
        self
    }
}

/// Cholesky of the lower triangle of `a`; the strict upper triangle is zeroed.
///
/// On a non-positive (or non-finite) pivot returns
/// [`Error::NotPositiveDefinite`] with the local pivot index.
pub fn potrf(a: &mut [f64], nt: usize) -> Result<()> {
    debug_assert_eq!(a.len(), nt * nt);
    for j in 0..nt {
        let (done, rest) = a.split_at_mut(j * nt);
        let col = &mut rest[..nt];
        for p in 0..j {
            let ljp = done[j + p * nt];
            if ljp != 0.0 {
                let src = &done[p * nt + j..(p + 1) * nt];
                for (x, &s) in col[j..].iter_mut().zip(src) {
                    *x -= ljp * s;
                }
            }
        }
        let d = col[j];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j });
        }
        let d = d.sqrt();
        col[j] = d;
        let inv = 1.0 / d;
        col[j + 1..].iter_mut().for_each(|x| *x *= inv);
        col[..j].iter_mut().for_each(|x| *x = 0.0);
    }
    Ok(())
}

const TRSM_BLOCK: usize = 32;

/// `b ← b L⁻ᵀ` where `l` holds a POTRF result.
pub fn trsm(l: &[f64], b: &mut [f64], nt: usize) -> Result<()> {
    debug_assert_eq!(l.len(), nt * nt);
    debug_assert_eq!(b.len(), nt * nt);
    for jb in (0..nt).step_by(TRSM_BLOCK) {
        let je = (jb + TRSM_BLOCK).min(nt);
        let (solved, rest) = b.split_at_mut(jb * nt);
        if jb > 0 {
            // rest[:, 0..je-jb] -= solved · L[jb..je, 0..jb]ᵀ
            unsafe {
                matrixmultiply::dgemm(
                    nt,
                    jb,
                    je - jb,
                    -1.0,
                    solved.as_ptr(),
                    1,
                    nt as isize,
                    l.as_ptr().add(jb),
                    nt as isize,
                    1,
                    1.0,
                    rest.as_mut_ptr(),
                    1,
                    nt as isize,
                );
            }
        }
        for j in jb..je {
            let (left, cur) = rest.split_at_mut((j - jb) * nt);
            let col = &mut cur[..nt];
            for p in jb..j {
                let ljp = l[j + p * nt];
                if ljp != 0.0 {
                    let src = &left[(p - jb) * nt..(p - jb + 1) * nt];
                    for (x, &s) in col.iter_mut().zip(src) {
                        *x -= ljp * s;
                    }
                }
            }
            let d = l[j + j * nt];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j });
            }
            let inv = 1.0 / d;
            col.iter_mut().for_each(|x| *x *= inv);
        }
    }
    Ok(())
}

/// `c ← c − a aᵀ`. The whole tile is updated; only the lower triangle is
/// meaningful for diagonal targets (POTRF clears the rest).
pub fn syrk(a: &[f64], c: &mut [f64], nt: usize) {
    gemm(a, a, c, nt);
}

/// `c ← c − b aᵀ`.
pub fn gemm(a: &[f64], b: &[f64], c: &mut [f64], nt: usize) {
    debug_assert!(a.len() == nt * nt && b.len() == nt * nt && c.len() == nt * nt);
    let s = nt as isize;
    unsafe {
        matrixmultiply::dgemm(nt, nt, nt, -1.0, b.as_ptr(), 1, s, a.as_ptr(), s, 1, 1.0, c.as_mut_ptr(), 1, s);
    }
}

/// `c ← c + t`.
pub fn geadd(t: &[f64], c: &mut [f64]) {
    debug_assert_eq!(t.len(), c.len());
    for (x, &y) in c.iter_mut().zip(t) {
        *x += y;
    }
}
