use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SymmetricCsc;
use crate::error::{Error, Result};

/// Shape of a generated block arrowhead test matrix.
///
/// The leading `n - t` block is either a band of half-width `b` or, when
/// `block_diagonal` is set, a sequence of disjoint dense `b x b` blocks. The
/// trailing `t` rows (and columns) are dense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowheadSpec {
    pub n: usize,
    pub b: usize,
    pub t: usize,
    pub block_diagonal: bool,
    pub seed: u64,
}

impl ArrowheadSpec {
    pub fn new(n: usize, b: usize, t: usize) -> Self {
        Self { n, b, t, block_diagonal: false, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn block_diagonal(mut self, on: bool) -> Self {
        self.block_diagonal = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t >= self.n {
            return Err(Error::InvalidArgument(format!("thickness {} must be below n = {}", self.t, self.n)));
        }
        if self.b >= self.n - self.t {
            return Err(Error::InvalidArgument(format!(
                "bandwidth {} must be below the leading block order {}",
                self.b,
                self.n - self.t
            )));
        }
        Ok(())
    }

    fn leading(&self) -> usize {
        self.n - self.t
    }

    /// Last row (exclusive) of the leading-block pattern in column `j < n - t`.
    fn band_end(&self, j: usize) -> usize {
        let m = self.leading();
        if self.block_diagonal && self.b > 0 {
            ((j / self.b + 1) * self.b).min(m)
        } else {
            (j + self.b + 1).min(m)
        }
    }

    /// Closed-form count of stored lower-triangle entries.
    pub fn lower_nnz(&self) -> usize {
        let (m, b, t) = (self.leading(), self.b, self.t);
        let band = if self.block_diagonal && b > 0 {
            let (q, r) = (m / b, m % b);
            q * b * (b + 1) / 2 + r * (r + 1) / 2
        } else {
            let w = b.min(m.saturating_sub(1));
            // sum_{d=0}^{w} (m - d)
            (w + 1) * m - w * (w + 1) / 2
        };
        band + t * m + t * (t + 1) / 2
    }

    /// Closed-form density of the full symmetric pattern, in percent.
    pub fn density_percent(&self) -> f64 {
        let full = 2 * self.lower_nnz() - self.n;
        100.0 * full as f64 / (self.n as f64 * self.n as f64)
    }
}

/// Generates a deterministic SPD block arrowhead matrix.
///
/// Off-diagonal values are uniform in `[-1, 1]` drawn from a ChaCha stream
/// seeded with `spec.seed`, visited in column-major lower order. Each diagonal
/// entry equals its row's absolute off-diagonal sum plus one, so the matrix is
/// strictly diagonally dominant.
pub fn generate_arrowhead(spec: &ArrowheadSpec) -> Result<SymmetricCsc> {
    spec.validate()?;
    let (n, m) = (spec.n, spec.leading());
    let nnz = spec.lower_nnz();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    let mut row_abs = vec![0.0f64; n];
    col_ptr.push(0);
    for j in 0..n {
        row_idx.push(j);
        values.push(0.0);
        let mut push = |i: usize, row_abs: &mut [f64]| {
            let v: f64 = rng.gen_range(-1.0..=1.0);
            row_idx.push(i);
            values.push(v);
            row_abs[i] += v.abs();
            row_abs[j] += v.abs();
        };
        if j < m {
            for i in j + 1..spec.band_end(j) {
                push(i, &mut row_abs);
            }
            for i in m..n {
                push(i, &mut row_abs);
            }
        } else {
            for i in j + 1..n {
                push(i, &mut row_abs);
            }
        }
        col_ptr.push(row_idx.len());
    }
    debug_assert_eq!(row_idx.len(), nnz);
    for j in 0..n {
        values[col_ptr[j]] = row_abs[j] + 1.0;
    }
    Ok(SymmetricCsc::from_parts_unchecked(n, col_ptr, row_idx, values))
}
